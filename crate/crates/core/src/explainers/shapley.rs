//! Shapley attributions against background values.
//!
//! `f_S(x_S)` is the mean over background rows of `f` evaluated on `x` with
//! every feature outside `S` replaced by the background row's value, and
//! `φ0 = f_∅`. Exact enumeration visits all `2^F` coalitions; above the
//! evaluation budget a weighted least-squares estimator over sampled
//! coalitions is used instead, constrained so that `φ0 + Σφᵢ = f(x)`.

use std::collections::HashMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::{ExplanationMeta, LinearExplanation, Method};
use crate::linalg::{solve_spd, Matrix};
use crate::models::Classifier;
use crate::rng::rng_from_seed;

/// Largest feature count accepted by [`shapley_exact`].
pub const EXACT_FEATURE_CAP: usize = 25;

/// `2F + 2^11` coalition evaluations.
pub fn default_budget(n_features: usize) -> usize {
    2 * n_features + (1 << 11)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapleyMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyAttribution {
    pub phi0: f64,
    pub phi: Vec<f64>,
    /// `f(x)`, the value the attributions add up to.
    pub fx: f64,
    pub background: Matrix,
    pub mode: ShapleyMode,
    pub budget: usize,
    pub seed: u64,
    /// Distinct coalitions evaluated.
    pub coalitions: usize,
}

impl ShapleyAttribution {
    pub fn efficiency_gap(&self) -> f64 {
        (self.phi0 + self.phi.iter().sum::<f64>() - self.fx).abs()
    }
}

/// Evaluates coalitions, reusing one scratch vector.
struct CoalitionGame<'a> {
    f: &'a dyn Classifier,
    x: &'a [f64],
    background: &'a Matrix,
    scratch: Vec<f64>,
}

impl<'a> CoalitionGame<'a> {
    fn new(f: &'a dyn Classifier, x: &'a [f64], background: &'a Matrix) -> Result<Self> {
        if x.len() != f.n_features() {
            return Err(Error::DimensionMismatch {
                expected: f.n_features(),
                actual: x.len(),
            });
        }
        if background.rows() == 0 || background.cols() != x.len() {
            return Err(Error::InvalidArgument(format!(
                "background must have at least one row of {} features",
                x.len()
            )));
        }
        Ok(Self {
            f,
            x,
            background,
            scratch: vec![0.0; x.len()],
        })
    }

    fn value(&mut self, present: impl Fn(usize) -> bool) -> f64 {
        let mut total = 0.0;
        for b in self.background.iter_rows() {
            for (i, s) in self.scratch.iter_mut().enumerate() {
                *s = if present(i) { self.x[i] } else { b[i] };
            }
            total += self.f.proba(&self.scratch);
        }
        total / self.background.rows() as f64
    }
}

/// Binomial coefficient as `f64`.
fn choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn shapley_exact(f: &dyn Classifier, x: &[f64], background: &Matrix) -> Result<ShapleyAttribution> {
    let n = x.len();
    if n > EXACT_FEATURE_CAP {
        return Err(Error::TooManyFeatures {
            features: n,
            cap: EXACT_FEATURE_CAP,
        });
    }
    let mut game = CoalitionGame::new(f, x, background)?;
    let full = 1usize << n;
    let values: Vec<f64> = (0..full)
        .map(|mask| game.value(|i| mask >> i & 1 == 1))
        .collect();
    // |S|! (F − |S| − 1)! / F!  =  1 / (F · C(F−1, |S|))
    let weight: Vec<f64> = (0..n.max(1)).map(|s| 1.0 / (n as f64 * choose(n - 1, s))).collect();
    let phi = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            (0..full)
                .filter(|m| m & bit == 0)
                .map(|m| weight[m.count_ones() as usize] * (values[m | bit] - values[m]))
                .sum()
        })
        .collect();
    Ok(ShapleyAttribution {
        phi0: values[0],
        phi,
        fx: values[full - 1],
        background: background.clone(),
        mode: ShapleyMode::Exact,
        budget: default_budget(n),
        seed: 0,
        coalitions: full,
    })
}

/// Shapley kernel weight of one coalition of size `s`.
fn kernel_weight(n: usize, s: usize) -> f64 {
    (n - 1) as f64 / (choose(n, s) * s as f64 * (n - s) as f64)
}

/// Regression estimate from `budget` coalitions (counting the empty and full
/// ones). Delegates to [`shapley_exact`] whenever `2^F <= budget`.
///
/// The `F` singletons and `F` leave-one-out coalitions are always included
/// with their kernel weights. The rest are drawn by size with probability
/// proportional to the total kernel weight of that size, uniformly within a
/// size, until `budget − 2F − 2` distinct coalitions are collected; they share
/// the remaining kernel mass in proportion to how often each was drawn.
pub fn shapley_sampled(
    f: &dyn Classifier,
    x: &[f64],
    background: &Matrix,
    budget: usize,
    seed: u64,
) -> Result<ShapleyAttribution> {
    let n = x.len();
    let floor = 2 * n + 2;
    if budget < floor {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} is below the minimum 2F+2 = {floor}"
        )));
    }
    if n < usize::BITS as usize - 1 && (1usize << n) <= budget && n <= EXACT_FEATURE_CAP {
        let mut exact = shapley_exact(f, x, background)?;
        exact.budget = budget;
        exact.seed = seed;
        return Ok(exact);
    }

    let mut game = CoalitionGame::new(f, x, background)?;
    let phi0 = game.value(|_| false);
    let fx = game.value(|_| true);

    let mut coalitions: Vec<Vec<bool>> = Vec::with_capacity(budget);
    let mut weights: Vec<f64> = Vec::with_capacity(budget);
    for i in 0..n {
        let mut single = vec![false; n];
        single[i] = true;
        coalitions.push(single);
        weights.push(kernel_weight(n, 1));
        let mut leave_out = vec![true; n];
        leave_out[i] = false;
        coalitions.push(leave_out);
        weights.push(kernel_weight(n, n - 1));
    }

    // Sizes 2..=F−2, each with total kernel mass (F−1)/(s(F−s)).
    let sizes: Vec<usize> = (2..n.saturating_sub(1)).collect();
    let mass: Vec<f64> = sizes
        .iter()
        .map(|&s| (n - 1) as f64 / (s * (n - s)) as f64)
        .collect();
    let total_mass: f64 = mass.iter().sum();
    let wanted = budget - floor;
    let mut draws: Vec<usize> = Vec::new();
    if !sizes.is_empty() && wanted > 0 {
        let mut rng = rng_from_seed(seed);
        let mut index: HashMap<Vec<bool>, usize> = HashMap::with_capacity(wanted);
        let mut pool: Vec<usize> = (0..n).collect();
        let max_draws = 100 * wanted + 10_000;
        let mut attempts = 0;
        while index.len() < wanted && attempts < max_draws {
            attempts += 1;
            let mut r = rng.random::<f64>() * total_mass;
            let mut s = sizes[sizes.len() - 1];
            for (&size, &m) in sizes.iter().zip(&mass) {
                if r < m {
                    s = size;
                    break;
                }
                r -= m;
            }
            for j in 0..s {
                let pick = rng.random_range(j..n);
                pool.swap(j, pick);
            }
            let mut mask = vec![false; n];
            for &i in &pool[..s] {
                mask[i] = true;
            }
            match index.get(&mask) {
                Some(&slot) => draws[slot] += 1,
                None => {
                    index.insert(mask.clone(), draws.len());
                    draws.push(1);
                    coalitions.push(mask);
                }
            }
        }
        let total_draws: usize = draws.iter().sum();
        weights.extend(draws.iter().map(|&c| total_mass * c as f64 / total_draws as f64));
    }

    // Constrained WLS: eliminate the last attribution via Σφ = Δ.
    let delta = fx - phi0;
    let last = n - 1;
    let p = n - 1;
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut row = vec![0.0; p];
    for (mask, &w) in coalitions.iter().zip(&weights) {
        let v = game.value(|i| mask[i]);
        let z_last = if mask[last] { 1.0 } else { 0.0 };
        let y = v - phi0 - z_last * delta;
        for (i, r) in row.iter_mut().enumerate() {
            *r = (if mask[i] { 1.0 } else { 0.0 }) - z_last;
        }
        for i in 0..p {
            if row[i] == 0.0 {
                continue;
            }
            let wi = w * row[i];
            b[i] += wi * y;
            for j in 0..=i {
                a[i * p + j] += wi * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            a[j * p + i] = a[i * p + j];
        }
    }
    let mut phi = solve_spd(a, &b).map_err(|e| e.context("sampled Shapley regression"))?;
    phi.push(delta - phi.iter().sum::<f64>());
    Ok(ShapleyAttribution {
        phi0,
        phi,
        fx,
        background: background.clone(),
        mode: ShapleyMode::Sampled,
        budget,
        seed,
        coalitions: coalitions.len() + 2,
    })
}

/// Keeps the `K` attributions of largest magnitude (ties to the lower index)
/// and converts them to raw-unit weights `wᵢ = φᵢ / (xᵢ − μᵢ)` around the
/// background mean `μ`, so that `g(x) = φ0 + Σ_kept φᵢ`.
///
/// A kept feature with `|xᵢ − μᵢ| <= 1e-9·max(1, |xᵢ|, |μᵢ|)` gets weight 0
/// and its attribution is folded into the intercept.
pub fn to_lle(attr: &ShapleyAttribution, x: &[f64], k: usize) -> Result<LinearExplanation> {
    let n = attr.phi.len();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!("K must lie in 1..={n}, got {k}")));
    }
    let mu = attr.background.column_means();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| attr.phi[b].abs().total_cmp(&attr.phi[a].abs()).then(a.cmp(&b)));

    let mut intercept = attr.phi0;
    let mut ranked = Vec::with_capacity(k);
    for &i in &order[..k] {
        let gap = x[i] - mu[i];
        let eps = 1e-9 * 1f64.max(x[i].abs()).max(mu[i].abs());
        if gap.abs() > eps {
            let w = attr.phi[i] / gap;
            intercept -= w * mu[i];
            ranked.push((i, w));
        } else {
            intercept += attr.phi[i];
        }
    }
    Ok(LinearExplanation::new(
        Method::Shap,
        attr.seed,
        k,
        intercept,
        ranked,
        ExplanationMeta {
            budget: Some(attr.budget),
            mode: Some(attr.mode),
            ..Default::default()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnClassifier;

    fn bg(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn single_feature_is_difference() {
        let f = FnClassifier::new(1, |x| 0.2 + 0.1 * x[0]);
        let a = shapley_exact(&f, &[3.0], &bg(&[&[1.0]])).unwrap();
        assert!((a.phi[0] - 0.2).abs() < 1e-12);
        assert!((a.phi0 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn product_splits_evenly() {
        let f = FnClassifier::new(2, |x| x[0] * x[1]);
        let a = shapley_exact(&f, &[1.0, 1.0], &bg(&[&[0.0, 0.0]])).unwrap();
        assert!((a.phi[0] - 0.5).abs() < 1e-12);
        assert!((a.phi[1] - 0.5).abs() < 1e-12);
        assert_eq!(a.phi0, 0.0);
    }

    #[test]
    fn linear_model_attributions() {
        let c = [0.3, -0.2, 0.05, 0.1];
        let f = FnClassifier::new(4, move |x| 0.1 + c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        let mu = [0.5, 1.0, -1.0, 2.0];
        let x = [1.0, 0.0, 3.0, 2.5];
        let a = shapley_exact(&f, &x, &bg(&[&mu])).unwrap();
        for i in 0..4 {
            assert!((a.phi[i] - c[i] * (x[i] - mu[i])).abs() < 1e-12);
        }
        assert!(a.efficiency_gap() < 1e-12);
    }

    #[test]
    fn multi_row_background_averages() {
        let f = FnClassifier::new(1, |x| x[0]);
        let a = shapley_exact(&f, &[1.0], &bg(&[&[0.0], &[0.5]])).unwrap();
        assert!((a.phi0 - 0.25).abs() < 1e-15);
        assert!((a.phi[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cap_and_budget_floor() {
        let f = FnClassifier::new(26, |_| 0.0);
        let x = vec![0.0; 26];
        let b = Matrix::zeros(1, 26);
        assert!(matches!(shapley_exact(&f, &x, &b), Err(Error::TooManyFeatures { .. })));
        assert!(shapley_sampled(&f, &x, &b, 53, 0).is_err());
    }

    #[test]
    fn sampled_delegates_when_enumeration_fits() {
        let f = FnClassifier::new(3, |x| (x[0] * x[1] + x[2]).tanh().abs());
        let b = bg(&[&[0.0, 0.0, 0.0]]);
        let e = shapley_exact(&f, &[1.0, 0.5, -0.2], &b).unwrap();
        let s = shapley_sampled(&f, &[1.0, 0.5, -0.2], &b, default_budget(3), 9).unwrap();
        assert_eq!(s.mode, ShapleyMode::Exact);
        assert_eq!(s.phi, e.phi);
    }

    #[test]
    fn sampled_is_efficient_and_seeded() {
        let f = FnClassifier::new(14, |x| {
            let s: f64 = x.iter().enumerate().map(|(i, v)| v * (i as f64 - 6.0) / 10.0).sum();
            1.0 / (1.0 + (-s - x[0] * x[1]).exp())
        });
        let x: Vec<f64> = (0..14).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = Matrix::zeros(1, 14);
        let a = shapley_sampled(&f, &x, &b, default_budget(14), 1).unwrap();
        assert_eq!(a.mode, ShapleyMode::Sampled);
        assert_eq!(a.coalitions, default_budget(14));
        assert!(a.efficiency_gap() < 1e-9);
        assert_eq!(a, shapley_sampled(&f, &x, &b, default_budget(14), 1).unwrap());
        assert_ne!(a.phi, shapley_sampled(&f, &x, &b, default_budget(14), 2).unwrap().phi);
    }

    fn attribution(phi0: f64, phi: Vec<f64>, mu: Vec<f64>) -> ShapleyAttribution {
        let fx = phi0 + phi.iter().sum::<f64>();
        ShapleyAttribution {
            phi0,
            phi,
            fx,
            background: Matrix::from_rows(&[mu]).unwrap(),
            mode: ShapleyMode::Exact,
            budget: 0,
            seed: 0,
            coalitions: 0,
        }
    }

    #[test]
    fn full_lle_is_locally_accurate() {
        let a = attribution(0.4, vec![0.1, -0.05, 0.2], vec![1.0, 2.0, 3.0]);
        let x = [2.0, 1.5, 2.0];
        let g = to_lle(&a, &x, 3).unwrap();
        assert!((g.evaluate(&x) - a.fx).abs() < 1e-12);
        assert_eq!(g.selected, vec![2, 0, 1]);
        assert!((g.weight(2) - (-0.2)).abs() < 1e-12);
    }

    #[test]
    fn truncation_keeps_top_magnitudes() {
        // f(x) = 0.72; keeping four attributions sums to 0.67.
        let a = attribution(
            0.35,
            vec![0.12, 0.01, -0.04, 0.1, 0.02, 0.14, 0.02],
            vec![0.0; 7],
        );
        assert!((a.fx - 0.72).abs() < 1e-12);
        let x = [1.0; 7];
        let g = to_lle(&a, &x, 4).unwrap();
        assert_eq!(g.selected, vec![5, 0, 3, 2]);
        assert!((g.evaluate(&x) - 0.67).abs() < 1e-12);
    }

    #[test]
    fn zero_gap_is_folded() {
        let a = attribution(0.2, vec![0.3, 0.1], vec![1.0, 0.0]);
        let x = [1.0, 2.0];
        let g = to_lle(&a, &x, 2).unwrap();
        assert_eq!(g.selected, vec![1]);
        assert_eq!(g.weight(0), 0.0);
        assert!((g.evaluate(&x) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn ties_rank_lower_index_first() {
        let a = attribution(0.0, vec![0.1, -0.1, 0.1], vec![0.0; 3]);
        let g = to_lle(&a, &[1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(g.selected, vec![0, 1]);
        assert!(to_lle(&a, &[1.0; 3], 0).is_err());
        assert!(to_lle(&a, &[1.0; 3], 4).is_err());
    }
}
