//! Native classifier zoo. Every trained model is a pure function
//! `R^F -> [0,1]` returning the probability of class `1`.

mod forest;
mod knn;
mod linear;
mod logistic;
mod mlp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub use forest::{DecisionTree, RandomForest, TreeNode};
pub use knn::KnnModel;
pub use linear::LinearModel;
pub use logistic::LogisticModel;
pub use mlp::MlpModel;

/// Anything that maps a feature vector to a score. Models in the zoo return
/// probabilities in `[0,1]`; closures wrapped in [`FnClassifier`] may not.
pub trait Classifier: Send + Sync {
    fn n_features(&self) -> usize;

    /// Evaluates without validating `x`.
    fn proba(&self, x: &[f64]) -> f64;

    /// Validated evaluation.
    fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("input contains non-finite values".into()));
        }
        Ok(self.proba(x))
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }
    fn proba(&self, x: &[f64]) -> f64 {
        (**self).proba(x)
    }
}

/// Wraps a closure as a [`Classifier`] of fixed dimensionality.
pub struct FnClassifier<F> {
    n_features: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnClassifier<F> {
    pub fn new(n_features: usize, f: F) -> Self {
        Self { n_features, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Classifier for FnClassifier<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }
    fn proba(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lin,
    Log,
    Rf,
    Kn,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Lin, Family::Log, Family::Rf, Family::Kn, Family::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Family::Lin => "lin",
            Family::Log => "log",
            Family::Rf => "rf",
            Family::Kn => "kn",
            Family::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyperparameters {
    Lin,
    Log {
        max_iter: usize,
        /// L2 penalty on the mean log-loss, in standardised feature units.
        l2: f64,
        tol: f64,
    },
    Rf {
        n_estimators: usize,
        max_depth: usize,
    },
    Kn {
        n_neighbors: usize,
    },
    Mlp {
        hidden_units: usize,
        epochs: usize,
        learning_rate: f64,
        batch_size: usize,
        l2: f64,
    },
}

impl Hyperparameters {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Lin => Hyperparameters::Lin,
            Family::Log => Hyperparameters::Log {
                max_iter: 100,
                l2: 1e-3,
                tol: 1e-8,
            },
            Family::Rf => Hyperparameters::Rf {
                n_estimators: 50,
                max_depth: 5,
            },
            Family::Kn => Hyperparameters::Kn { n_neighbors: 3 },
            Family::Mlp => Hyperparameters::Mlp {
                hidden_units: 100,
                epochs: 200,
                learning_rate: 0.01,
                batch_size: 32,
                l2: 1e-4,
            },
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Hyperparameters::Lin => Family::Lin,
            Hyperparameters::Log { .. } => Family::Log,
            Hyperparameters::Rf { .. } => Family::Rf,
            Hyperparameters::Kn { .. } => Family::Kn,
            Hyperparameters::Mlp { .. } => Family::Mlp,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what} must be at least 1")));
        match *self {
            Hyperparameters::Rf { n_estimators, .. } if n_estimators < 1 => bad("n_estimators"),
            Hyperparameters::Rf { max_depth, .. } if max_depth < 1 => bad("max_depth"),
            Hyperparameters::Kn { n_neighbors } if n_neighbors < 1 => bad("n_neighbors"),
            Hyperparameters::Mlp { hidden_units, .. } if hidden_units < 1 => bad("hidden_units"),
            Hyperparameters::Mlp { epochs, .. } if epochs < 1 => bad("epochs"),
            Hyperparameters::Mlp { batch_size, .. } if batch_size < 1 => bad("batch_size"),
            Hyperparameters::Mlp { learning_rate, .. } if !(learning_rate > 0.0) => Err(
                Error::InvalidArgument("learning_rate must be positive".into()),
            ),
            Hyperparameters::Log { max_iter, .. } if max_iter < 1 => bad("max_iter"),
            Hyperparameters::Log { l2, .. } | Hyperparameters::Mlp { l2, .. } if l2 < 0.0 => Err(
                Error::InvalidArgument("l2 penalty must be non-negative".into()),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        Self {
            hyperparameters: Hyperparameters::default_for(family),
            seed,
        }
    }

    pub fn family(&self) -> Family {
        self.hyperparameters.family()
    }
}

/// Serializable summary of a trained model, embedded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub family: Family,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    pub training_accuracy: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
enum Trained {
    Lin(LinearModel),
    Log(LogisticModel),
    Rf(RandomForest),
    Kn(KnnModel),
    Mlp(MlpModel),
}

/// A trained model from the zoo plus its descriptor.
#[derive(Debug, Clone)]
pub struct BlackBox {
    model: Trained,
    descriptor: ModelDescriptor,
}

impl BlackBox {
    pub fn descriptor(&self) -> &ModelDescriptor {
        &self.descriptor
    }

    pub fn family(&self) -> Family {
        self.descriptor.family
    }

    pub fn as_forest(&self) -> Option<&RandomForest> {
        match &self.model {
            Trained::Rf(f) => Some(f),
            _ => None,
        }
    }

    fn wrap(model: Trained, hyperparameters: Hyperparameters, seed: u64, warnings: Vec<String>) -> Self {
        let family = hyperparameters.family();
        Self {
            model,
            descriptor: ModelDescriptor {
                family,
                hyperparameters,
                seed,
                training_accuracy: f64::NAN,
                warnings,
            },
        }
    }
}

impl Classifier for BlackBox {
    fn n_features(&self) -> usize {
        match &self.model {
            Trained::Lin(m) => m.n_features(),
            Trained::Log(m) => m.n_features(),
            Trained::Rf(m) => m.n_features(),
            Trained::Kn(m) => m.n_features(),
            Trained::Mlp(m) => m.n_features(),
        }
    }

    fn proba(&self, x: &[f64]) -> f64 {
        match &self.model {
            Trained::Lin(m) => m.proba(x),
            Trained::Log(m) => m.proba(x),
            Trained::Rf(m) => m.proba(x),
            Trained::Kn(m) => m.proba(x),
            Trained::Mlp(m) => m.proba(x),
        }
    }
}

impl From<LinearModel> for BlackBox {
    fn from(m: LinearModel) -> Self {
        BlackBox::wrap(Trained::Lin(m), Hyperparameters::Lin, 0, Vec::new())
    }
}

impl From<MlpModel> for BlackBox {
    fn from(m: MlpModel) -> Self {
        let hp = Hyperparameters::Mlp {
            hidden_units: m.hidden_units(),
            epochs: 0,
            learning_rate: 0.01,
            batch_size: 32,
            l2: 0.0,
        };
        BlackBox::wrap(Trained::Mlp(m), hp, 0, Vec::new())
    }
}

/// Trains a model from the zoo. Deterministic for a fixed `(spec, dataset)`.
pub fn train(spec: &ModelSpec, d: &Dataset) -> Result<BlackBox> {
    spec.hyperparameters.validate()?;
    if !d.has_both_classes() {
        let only = d.labels()[0];
        return Err(Error::SingleClass(only));
    }
    let hp = spec.hyperparameters.clone();
    let mut warnings = Vec::new();
    let model = match hp {
        Hyperparameters::Lin => Trained::Lin(LinearModel::fit(d)?),
        Hyperparameters::Log { max_iter, l2, tol } => {
            let (m, warn) = LogisticModel::fit(d, max_iter, l2, tol)?;
            warnings.extend(warn);
            Trained::Log(m)
        }
        Hyperparameters::Rf {
            n_estimators,
            max_depth,
        } => Trained::Rf(RandomForest::fit(d, n_estimators, max_depth, spec.seed)),
        Hyperparameters::Kn { n_neighbors } => Trained::Kn(KnnModel::fit(d, n_neighbors)),
        Hyperparameters::Mlp {
            hidden_units,
            epochs,
            learning_rate,
            batch_size,
            l2,
        } => {
            let (m, warn) = MlpModel::fit(
                d,
                mlp::TrainParams {
                    hidden_units,
                    epochs,
                    learning_rate,
                    batch_size,
                    l2,
                    seed: spec.seed,
                },
            );
            warnings.extend(warn);
            Trained::Mlp(m)
        }
    };
    let mut bb = BlackBox::wrap(model, hp, spec.seed, warnings);
    bb.descriptor.training_accuracy = accuracy(&bb, d);
    Ok(bb)
}

/// Fraction of rows whose thresholded prediction (`>= 0.5` is class 1) matches the label.
pub fn accuracy(m: &(impl Classifier + ?Sized), d: &Dataset) -> f64 {
    let hits = d
        .rows()
        .zip(d.labels())
        .filter(|(x, &y)| u8::from(m.proba(x) >= 0.5) == y)
        .count();
    hits as f64 / d.n_rows() as f64
}

/// Per-column standardisation used internally by models that need
/// well-scaled inputs. Constant columns get unit scale.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(d: &Dataset) -> Self {
        let stats = crate::data::feature_stats(d);
        let scale = stats
            .stddev
            .iter()
            .map(|&s| if s > 0.0 { s } else { 1.0 })
            .collect();
        Self {
            mean: stats.mean,
            scale,
        }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }
}
