use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::models::{Classifier, Standardizer};

/// Least-squares regressor on the `{0,1}` labels; its output is clamped to `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    intercept: f64,
    weights: Vec<f64>,
}

impl LinearModel {
    pub fn from_parts(intercept: f64, weights: Vec<f64>) -> Self {
        Self { intercept, weights }
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Ordinary least squares with an intercept. Solved on standardised columns
    /// for conditioning, then mapped back to raw units.
    pub fn fit(d: &Dataset) -> Result<Self> {
        let std = Standardizer::fit(d);
        let stats = crate::data::feature_stats(d);
        if let Some(j) = stats.stddev.iter().position(|&s| s == 0.0) {
            return Err(Error::Singular(format!(
                "feature {j} is constant, so the least-squares system is singular"
            )));
        }
        let f = d.n_features();
        let n = d.n_rows() as f64;
        let ybar = d.positives() as f64 / n;
        let mut gram = vec![0.0; f * f];
        let mut rhs = vec![0.0; f];
        let mut z = vec![0.0; f];
        for (x, &y) in d.rows().zip(d.labels()) {
            std.apply_into(x, &mut z);
            let yc = f64::from(y) - ybar;
            for i in 0..f {
                rhs[i] += z[i] * yc;
                for j in 0..=i {
                    gram[i * f + j] += z[i] * z[j];
                }
            }
        }
        for i in 0..f {
            for j in 0..i {
                gram[j * f + i] = gram[i * f + j];
            }
        }
        let beta = solve_spd(gram, &rhs)
            .map_err(|e| e.context("least-squares fit has collinear features"))?;
        let weights: Vec<f64> = beta.iter().zip(&std.scale).map(|(b, s)| b / s).collect();
        let intercept = ybar - weights.iter().zip(&std.mean).map(|(w, m)| w * m).sum::<f64>();
        Ok(Self { intercept, weights })
    }
}

impl Classifier for LinearModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        let v = self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        v.clamp(0.0, 1.0)
    }
}
