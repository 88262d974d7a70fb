//! Neighbourhood explainer with greedy forward feature selection.
//!
//! The neighbourhood is expressed in standardised offsets `u = (z − x) / σ`
//! for the kernel distance and the ridge fits, which makes both invariant to
//! feature units. Weights are mapped back to raw units at the end.

use crate::data::FeatureStats;
use crate::error::{Error, Result};
use crate::explainers::neighborhood::sample_neighborhood;
use crate::explainers::ridge::{weighted_ridge_fit, WeightedGram};
use crate::explainers::{ExplanationMeta, LinearExplanation, Method, NeighborhoodConfig};
use crate::linalg::Matrix;
use crate::models::Classifier;

/// A LIME explanation together with the selection trace.
#[derive(Debug, Clone)]
pub struct LimeFit {
    pub explanation: LinearExplanation,
    /// Penalised weighted residual after each selection step, starting with
    /// the intercept-only model.
    pub objective_path: Vec<f64>,
}

pub fn explain_lime(
    f: &dyn Classifier,
    x: &[f64],
    stats: &FeatureStats,
    k: usize,
    cfg: &NeighborhoodConfig,
) -> Result<LinearExplanation> {
    fit_lime(f, x, stats, k, cfg).map(|r| r.explanation)
}

pub fn fit_lime(
    f: &dyn Classifier,
    x: &[f64],
    stats: &FeatureStats,
    k: usize,
    cfg: &NeighborhoodConfig,
) -> Result<LimeFit> {
    let trace = Trace::new(f, x, stats, k, cfg)?;
    Ok(LimeFit {
        explanation: trace.explanation(x, stats, k, cfg)?,
        objective_path: trace.path,
    })
}

/// Explanations of several sizes from one neighbourhood. Forward selection
/// is greedy, so the selection for a smaller `K` is a prefix of the larger
/// one; each size gets its own final fit. Identical to calling
/// [`explain_lime`] once per size with the same seed.
pub fn explain_lime_sizes(
    f: &dyn Classifier,
    x: &[f64],
    stats: &FeatureStats,
    ks: &[usize],
    cfg: &NeighborhoodConfig,
) -> Result<Vec<LinearExplanation>> {
    let Some(&max_k) = ks.iter().max() else {
        return Ok(Vec::new());
    };
    if let Some(&k) = ks.iter().find(|&&k| k < 1) {
        return Err(Error::InvalidArgument(format!("K must be positive, got {k}")));
    }
    let trace = Trace::new(f, x, stats, max_k, cfg)?;
    ks.iter().map(|&k| trace.explanation(x, stats, k, cfg)).collect()
}

/// The neighbourhood, its fit inputs and the forward-selection order.
struct Trace {
    gamma: f64,
    offsets: Matrix,
    targets: Vec<f64>,
    kernel: Vec<f64>,
    selected: Vec<usize>,
    path: Vec<f64>,
}

impl Trace {
    fn new(f: &dyn Classifier, x: &[f64], stats: &FeatureStats, k: usize, cfg: &NeighborhoodConfig) -> Result<Self> {
        let n_features = x.len();
        if n_features != f.n_features() {
            return Err(Error::DimensionMismatch {
                expected: f.n_features(),
                actual: n_features,
            });
        }
        if k < 1 || k > n_features {
            return Err(Error::InvalidArgument(format!(
                "K must lie in 1..={n_features}, got {k}"
            )));
        }
        let gamma = cfg.width(n_features);
        let neighborhood = sample_neighborhood(x, stats, cfg)?;
        let h = neighborhood.rows();

        let mut offsets = Matrix::zeros(h, n_features);
        let mut targets = Vec::with_capacity(h);
        let mut kernel = Vec::with_capacity(h);
        for (j, z) in neighborhood.iter_rows().enumerate() {
            targets.push(f.proba(z));
            let u = offsets.row_mut(j);
            let mut d2 = 0.0;
            for i in 0..n_features {
                let s = stats.stddev[i];
                if s > 0.0 {
                    u[i] = (z[i] - x[i]) / s;
                    d2 += u[i] * u[i];
                }
            }
            // Same value as kernel_weight(u, 0, γ).
            kernel.push((-d2 / (gamma * gamma)).exp());
        }

        let gram = WeightedGram::new(&offsets, &targets, &kernel)?;
        let candidates: Vec<usize> = (0..n_features)
            .filter(|&i| stats.stddev[i] > 0.0 && gram.column_spread(i) > 0.0)
            .collect();
        let alpha = cfg.ridge_alpha;
        let tie = 1e-12 * gram.null_objective();

        let mut selected: Vec<usize> = Vec::with_capacity(k);
        let mut path = vec![gram.null_objective()];
        while selected.len() < k {
            let mut best: Option<(usize, f64)> = None;
            let mut trial = selected.clone();
            trial.push(0);
            for &c in candidates.iter().filter(|c| !selected.contains(c)) {
                *trial.last_mut().unwrap() = c;
                let obj = gram.fit(&trial, alpha)?.objective;
                // Candidates are visited in index order, so a tie keeps the lower index.
                if best.is_none_or(|(_, b)| obj < b - tie) {
                    best = Some((c, obj));
                }
            }
            let Some((c, obj)) = best else { break };
            selected.push(c);
            path.push(obj);
        }
        Ok(Self {
            gamma,
            offsets,
            targets,
            kernel,
            selected,
            path,
        })
    }

    /// Final fit through the general solver on the first `k` selected columns.
    fn explanation(&self, x: &[f64], stats: &FeatureStats, k: usize, cfg: &NeighborhoodConfig) -> Result<LinearExplanation> {
        let selected = &self.selected[..k.min(self.selected.len())];
        let h = self.offsets.rows();
        let mut sub = Matrix::zeros(h, selected.len());
        for j in 0..h {
            let (src, dst) = (self.offsets.row(j), sub.row_mut(j));
            for (d, &i) in dst.iter_mut().zip(selected) {
                *d = src[i];
            }
        }
        let fit = weighted_ridge_fit(&sub, &self.targets, &self.kernel, cfg.ridge_alpha)?;

        // g(z) = w0_u + Σ bᵢ (zᵢ − xᵢ)/σᵢ  =>  raw weight bᵢ/σᵢ, intercept w0_u − Σ (bᵢ/σᵢ) xᵢ.
        let raw: Vec<(usize, f64)> = selected
            .iter()
            .zip(&fit.coefficients)
            .map(|(&i, b)| (i, b / stats.stddev[i]))
            .collect();
        let intercept = fit.intercept - raw.iter().map(|&(i, w)| w * x[i]).sum::<f64>();
        Ok(LinearExplanation::new(
            Method::Lime,
            cfg.seed,
            k,
            intercept,
            raw,
            ExplanationMeta {
                gamma: Some(self.gamma),
                samples: Some(h),
                ..Default::default()
            },
        ))
    }
}

