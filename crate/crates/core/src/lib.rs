//! Local linear explanations of black-box tabular classifiers.
//!
//! The crate is organised around the pipeline an explanation goes through:
//!
//! - [`data`]: CSV loading, feature statistics, seeded splits and synthetic datasets;
//! - [`models`]: a small native classifier zoo exposing probability-of-positive functions;
//! - [`explainers`]: a LIME-style neighbourhood explainer and Shapley attributions with
//!   conversion to a linear explanation;
//! - [`metrics`]: conciseness, local fidelity, local concordance, reiteration similarity
//!   and prescriptivity;
//! - [`oracles`]: brute-force reference implementations used to cross-check the above;
//! - [`harness`]: configuration, seeded single-instance audits and model sweeps, reports.

pub mod data;
pub mod error;
pub mod explainers;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod oracles;
pub mod rng;

pub use data::{Dataset, FeatureStats};
pub use error::{Error, Result};
pub use explainers::{
    LinearExplanation, Method, NeighborhoodConfig, ShapleyAttribution, ShapleyMode,
};
pub use linalg::Matrix;
pub use metrics::{MetricScores, PrescriptivePoint};
pub use models::{BlackBox, Classifier, Family, FnClassifier, ModelSpec};
