//! Fixtures shared by the benchmarks.

use leaf::data::{self, feature_stats};
use leaf::models::{train, Family, ModelSpec};
use leaf::{BlackBox, FeatureStats, Matrix};

pub struct Fixture {
    pub model: BlackBox,
    pub stats: FeatureStats,
    pub x: Vec<f64>,
    pub background: Matrix,
}

/// A model trained on the synthetic drug-like data, with the training mean
/// as background and the first row as the instance.
pub fn drug_like(family: Family) -> Fixture {
    let d = data::drug_like(1000, 1);
    let model = train(&ModelSpec::new(family, 0), &d).expect("training succeeds");
    let stats = feature_stats(&d);
    let background = Matrix::from_rows(&[stats.mean.clone()]).expect("one row");
    Fixture {
        model,
        x: d.row(0).to_vec(),
        stats,
        background,
    }
}
