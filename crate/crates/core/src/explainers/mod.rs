//! Local linear explanations `g(z) = w0 + Σ wᵢ zᵢ` of a black box around one
//! instance.
//!
//! Two routes produce them. [`lime::explain_lime`] samples a Gaussian
//! neighbourhood, weights it with an exponential kernel and grows a feature set
//! greedily with weighted ridge fits. [`shapley`] computes Shapley attributions
//! against background values and [`shapley::to_lle`] turns the top-`K` of them
//! into a linear model that reproduces `f(x)` up to truncation.
//!
//! The two notions of importance differ. A LIME weight measures how much `f`
//! moves when the feature is perturbed around `x`; a Shapley value measures
//! how much `f` moves when the feature goes from its background value to `x`.
//! Explanations of the same decision therefore need not agree.

pub mod lime;
pub mod neighborhood;
pub mod ridge;
pub mod shapley;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lime::{explain_lime, explain_lime_sizes, fit_lime, LimeFit};
pub use neighborhood::{default_kernel_width, kernel_weight, sample_neighborhood, NeighborhoodConfig};
pub use ridge::{weighted_ridge_fit, RidgeFit};
pub use shapley::{
    default_budget, shapley_exact, shapley_sampled, to_lle, ShapleyAttribution, ShapleyMode,
    EXACT_FEATURE_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lime,
    Shap,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lime => "lime",
            Method::Shap => "shap",
        }
    }

    /// Stable numeric id used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            Method::Lime => 0,
            Method::Shap => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lime" => Ok(Method::Lime),
            "shap" => Ok(Method::Shap),
            other => Err(Error::Config(format!("unknown explainer {other:?}"))),
        }
    }
}

/// Provenance of an explanation; fields not used by a method are omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ShapleyMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

/// A sparse linear model in raw feature units.
///
/// `selected` lists the non-zero-weight features in the order the explainer
/// ranked them; `weights` has exactly those keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearExplanation {
    pub method: Method,
    pub seed: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub intercept: f64,
    pub weights: BTreeMap<usize, f64>,
    pub selected: Vec<usize>,
    #[serde(default)]
    pub meta: ExplanationMeta,
}

impl LinearExplanation {
    /// Builds an explanation from `(feature, weight)` pairs in rank order,
    /// dropping exact zeros.
    pub fn new(
        method: Method,
        seed: u64,
        k: usize,
        intercept: f64,
        ranked: impl IntoIterator<Item = (usize, f64)>,
        meta: ExplanationMeta,
    ) -> Self {
        let mut weights = BTreeMap::new();
        let mut selected = Vec::new();
        for (i, w) in ranked {
            if w != 0.0 && weights.insert(i, w).is_none() {
                selected.push(i);
            }
        }
        Self {
            method,
            seed,
            k,
            intercept,
            weights,
            selected,
            meta,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().map(|(&i, w)| w * x[i]).sum::<f64>()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.get(&i).copied().unwrap_or(0.0)
    }
}
