use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::FeatureStats;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from_seed;

/// Settings for a synthetic neighbourhood and the fit made on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodConfig {
    /// Number of perturbed samples `H`.
    pub samples: usize,
    /// Kernel width; `None` means `0.75 * sqrt(F)`.
    pub kernel_width: Option<f64>,
    /// Ridge penalty used by the LIME fit.
    pub ridge_alpha: f64,
    pub seed: u64,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        Self {
            samples: 5000,
            kernel_width: None,
            ridge_alpha: 1.0,
            seed: 0,
        }
    }
}

impl NeighborhoodConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn width(&self, n_features: usize) -> f64 {
        self.kernel_width
            .unwrap_or_else(|| default_kernel_width(n_features))
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("neighbourhood needs at least one sample".into()));
        }
        if let Some(g) = self.kernel_width {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidArgument(format!("kernel width must be positive, got {g}")));
            }
        }
        if !(self.ridge_alpha >= 0.0) {
            return Err(Error::InvalidArgument("ridge alpha must be non-negative".into()));
        }
        Ok(())
    }
}

pub fn default_kernel_width(n_features: usize) -> f64 {
    0.75 * (n_features as f64).sqrt()
}

/// `exp(-‖x − z‖² / γ²)`.
pub fn kernel_weight(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (gamma * gamma)).exp()
}

/// `H` rows `x + p` with `p_i ~ N(0, stddev_i)` drawn independently per feature.
/// Features with zero spread are copied unchanged.
pub fn sample_neighborhood(x: &[f64], stats: &FeatureStats, cfg: &NeighborhoodConfig) -> Result<Matrix> {
    if x.len() != stats.n_features() {
        return Err(Error::DimensionMismatch {
            expected: stats.n_features(),
            actual: x.len(),
        });
    }
    cfg.validate()?;
    let f = x.len();
    let mut rng = rng_from_seed(cfg.seed);
    let mut out = Matrix::zeros(cfg.samples, f);
    for j in 0..cfg.samples {
        let row = out.row_mut(j);
        for i in 0..f {
            let e: f64 = StandardNormal.sample(&mut rng);
            let s = stats.stddev[i];
            row[i] = if s > 0.0 { x[i] + s * e } else { x[i] };
        }
    }
    Ok(out)
}
