//! Weighted ridge regression with an unpenalised intercept, solved through
//! centred normal equations and a Cholesky factorisation.

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// `Σ wⱼ (tⱼ − w0 − b·zⱼ)² + α‖b‖²` at the optimum.
    pub objective: f64,
}

/// Weighted, centred second moments of a design. Any column subset can be
/// fitted from these without touching the rows again.
#[derive(Debug, Clone)]
pub struct WeightedGram {
    k: usize,
    col_mean: Vec<f64>,
    target_mean: f64,
    /// `Σ w (z − z̄)(z − z̄)ᵀ`, row-major `k×k`.
    cov: Vec<f64>,
    /// `Σ w (z − z̄)(t − t̄)`.
    cross: Vec<f64>,
    /// `Σ w (t − t̄)²`.
    target_ss: f64,
}

impl WeightedGram {
    pub fn new(points: &Matrix, targets: &[f64], weights: &[f64]) -> Result<Self> {
        let n = points.rows();
        let k = points.cols();
        if targets.len() != n || weights.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{n} points but {} targets and {} weights",
                targets.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("sample weight {w} is not a finite non-negative value")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("sample weights are all zero".into()));
        }
        let mut col_mean = vec![0.0; k];
        let mut target_mean = 0.0;
        for ((z, &t), &w) in points.iter_rows().zip(targets).zip(weights) {
            target_mean += w * t;
            for (m, v) in col_mean.iter_mut().zip(z) {
                *m += w * v;
            }
        }
        col_mean.iter_mut().for_each(|m| *m /= total);
        target_mean /= total;
        // A constant target must have exactly zero spread, otherwise rounding
        // noise decides the feature ranking.
        if targets.iter().all(|&t| t == targets[0]) {
            target_mean = targets[0];
        }

        let mut cov = vec![0.0; k * k];
        let mut cross = vec![0.0; k];
        let mut target_ss = 0.0;
        let mut c = vec![0.0; k];
        for ((z, &t), &w) in points.iter_rows().zip(targets).zip(weights) {
            if w == 0.0 {
                continue;
            }
            for ((ci, v), m) in c.iter_mut().zip(z).zip(&col_mean) {
                *ci = v - m;
            }
            let tc = t - target_mean;
            target_ss += w * tc * tc;
            for i in 0..k {
                let wi = w * c[i];
                cross[i] += wi * tc;
                let row = &mut cov[i * k..i * k + i + 1];
                for (r, cj) in row.iter_mut().zip(&c[..=i]) {
                    *r += wi * cj;
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                cov[j * k + i] = cov[i * k + j];
            }
        }
        Ok(Self {
            k,
            col_mean,
            target_mean,
            cov,
            cross,
            target_ss,
        })
    }

    pub fn n_columns(&self) -> usize {
        self.k
    }

    /// Objective of the intercept-only model.
    pub fn null_objective(&self) -> f64 {
        self.target_ss
    }

    /// Weighted variance-like spread of column `j`.
    pub fn column_spread(&self, j: usize) -> f64 {
        self.cov[j * self.k + j]
    }

    /// Ridge fit restricted to `columns`; coefficients follow `columns` order.
    pub fn fit(&self, columns: &[usize], alpha: f64) -> Result<RidgeFit> {
        let m = columns.len();
        let mut a = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        for (p, &i) in columns.iter().enumerate() {
            b[p] = self.cross[i];
            for (q, &j) in columns.iter().enumerate() {
                a[p * m + q] = self.cov[i * self.k + j];
            }
            a[p * m + p] += alpha;
        }
        let coefficients = if m == 0 {
            Vec::new()
        } else {
            solve_spd(a, &b).map_err(|e| {
                if alpha == 0.0 {
                    Error::Singular(format!(
                        "collinear inputs make the unpenalised system singular; use alpha > 0 ({e})"
                    ))
                } else {
                    e
                }
            })?
        };
        let explained: f64 = coefficients.iter().zip(&b).map(|(c, r)| c * r).sum();
        let objective = (self.target_ss - explained).max(0.0);
        let intercept = self.target_mean
            - coefficients
                .iter()
                .zip(columns)
                .map(|(c, &i)| c * self.col_mean[i])
                .sum::<f64>();
        Ok(RidgeFit {
            intercept,
            coefficients,
            objective,
        })
    }
}

/// Minimises `Σ wⱼ (tⱼ − w0 − b·zⱼ)² + α‖b‖²` with the intercept unpenalised.
pub fn weighted_ridge_fit(points: &Matrix, targets: &[f64], sample_weights: &[f64], alpha: f64) -> Result<RidgeFit> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {alpha}")));
    }
    if points.rows() < points.cols() + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} points for {} coefficients and an intercept",
            points.cols() + 1,
            points.cols()
        )));
    }
    let gram = WeightedGram::new(points, targets, sample_weights)?;
    let all: Vec<usize> = (0..points.cols()).collect();
    gram.fit(&all, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn design(n: usize, k: usize, seed: u64) -> Matrix {
        let mut rng = crate::rng::rng_from_seed(seed);
        let data = (0..n * k).map(|_| rng.random_range(-2.0..2.0)).collect();
        Matrix::from_vec(n, k, data).unwrap()
    }

    /// Augmented normal equations `[1 Z]ᵀ W [1 Z] + diag(0, α…)` solved by
    /// Gaussian elimination with partial pivoting.
    fn oracle(z: &Matrix, t: &[f64], w: &[f64], alpha: f64) -> Vec<f64> {
        let p = z.cols() + 1;
        let mut a = vec![vec![0.0; p + 1]; p];
        for ((row, &ti), &wi) in z.iter_rows().zip(t).zip(w) {
            let mut x = vec![1.0];
            x.extend_from_slice(row);
            for i in 0..p {
                for j in 0..p {
                    a[i][j] += wi * x[i] * x[j];
                }
                a[i][p] += wi * x[i] * ti;
            }
        }
        for (i, r) in a.iter_mut().enumerate().skip(1) {
            r[i] += alpha;
        }
        for c in 0..p {
            let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for j in c..=p {
                        a[r][j] -= f * a[c][j];
                    }
                }
            }
        }
        (0..p).map(|i| a[i][p] / a[i][i]).collect()
    }

    #[test]
    fn exact_linear_targets_recovered() {
        let z = design(30, 3, 1);
        let t: Vec<f64> = z.iter_rows().map(|r| 0.5 + 2.0 * r[0] - r[1] + 0.25 * r[2]).collect();
        let fit = weighted_ridge_fit(&z, &t, &vec![1.0; 30], 0.0).unwrap();
        assert!((fit.intercept - 0.5).abs() < 1e-9);
        for (c, want) in fit.coefficients.iter().zip([2.0, -1.0, 0.25]) {
            assert!((c - want).abs() < 1e-9);
        }
        assert!(fit.objective < 1e-12);
    }

    #[test]
    fn uniform_weight_scale_does_not_matter() {
        let z = design(40, 2, 2);
        let t: Vec<f64> = z.iter_rows().map(|r| r[0].sin() + r[1]).collect();
        let a = weighted_ridge_fit(&z, &t, &vec![1.0; 40], 0.0).unwrap();
        let b = weighted_ridge_fit(&z, &t, &vec![3.7; 40], 0.0).unwrap();
        assert!((a.intercept - b.intercept).abs() < 1e-12);
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_independent_normal_equations() {
        let z = design(50, 3, 3);
        let mut rng = crate::rng::rng_from_seed(4);
        let t: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..1.0)).collect();
        let w: Vec<f64> = (0..50).map(|_| rng.random_range(0.1..2.0)).collect();
        let fit = weighted_ridge_fit(&z, &t, &w, 1.0).unwrap();
        let want = oracle(&z, &t, &w, 1.0);
        assert!((fit.intercept - want[0]).abs() < 1e-8);
        for (c, o) in fit.coefficients.iter().zip(&want[1..]) {
            assert!((c - o).abs() < 1e-8, "{c} vs {o}");
        }
        // Objective agrees with a direct evaluation.
        let direct: f64 = z
            .iter_rows()
            .zip(&t)
            .zip(&w)
            .map(|((r, ti), wi)| {
                let p = fit.intercept + r.iter().zip(&fit.coefficients).map(|(a, b)| a * b).sum::<f64>();
                wi * (ti - p) * (ti - p)
            })
            .sum::<f64>()
            + fit.coefficients.iter().map(|c| c * c).sum::<f64>();
        assert!((direct - fit.objective).abs() < 1e-9 * direct.max(1.0));
    }

    #[test]
    fn collinear_without_penalty_is_singular() {
        let rows: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        let z = Matrix::from_rows(&rows).unwrap();
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let err = weighted_ridge_fit(&z, &t, &[1.0; 10], 0.0).unwrap_err();
        assert!(err.to_string().contains("alpha > 0"), "{err}");
        assert!(weighted_ridge_fit(&z, &t, &[1.0; 10], 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_weights() {
        let z = design(5, 1, 5);
        assert!(weighted_ridge_fit(&z, &[0.0; 5], &[0.0; 5], 1.0).is_err());
        assert!(weighted_ridge_fit(&z, &[0.0; 5], &[1.0, -1.0, 1.0, 1.0, 1.0], 1.0).is_err());
        assert!(weighted_ridge_fit(&design(1, 1, 6), &[0.0], &[1.0], 1.0).is_err());
    }
}
