//! Tabular binary-classification datasets.
//!
//! Features are kept in raw units; class `1` is the positive class.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::rng_from_seed;

/// Numeric feature matrix with `{0,1}` labels. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if features.cols() == 0 {
            return Err(Error::InvalidDataset("at least one feature is required".into()));
        }
        if features.rows() == 0 {
            return Err(Error::InvalidDataset("dataset has no rows".into()));
        }
        if labels.len() != features.rows() {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::InvalidDataset(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / features.cols() + 1,
                pos % features.cols() + 1
            )));
        }
        if let Some(row) = labels.iter().position(|&y| y > 1) {
            return Err(Error::ParseRow {
                row: row + 1,
                message: "label outside {0,1}".into(),
            });
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    /// Builds a dataset with generated feature names `x0, x1, ...`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], labels: Vec<u8>) -> Result<Self> {
        let features = Matrix::from_rows(rows)?;
        let names = (0..features.cols()).map(|i| format!("x{i}")).collect();
        Self::new(features, labels, names)
    }

    pub fn n_rows(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.iter_rows()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Number of rows with label `1`.
    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.n_rows()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let cols = self.n_features();
        let mut data = Vec::with_capacity(indices.len() * cols);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Self::new(
            Matrix::from_vec(indices.len(), cols, data)?,
            labels,
            self.feature_names.clone(),
        )
    }

    /// Serialises to the CSV layout accepted by [`load_csv`]. Values use the
    /// shortest representation that parses back to the same `f64`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.feature_names.join(","));
        out.push_str(",label\n");
        for (row, y) in self.rows().zip(&self.labels) {
            for v in row {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{y}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl FeatureStats {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }
}

pub fn feature_stats(d: &Dataset) -> FeatureStats {
    let n = d.n_rows() as f64;
    let mean = d.features().column_means();
    let mut var = vec![0.0; d.n_features()];
    for row in d.rows() {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            let c = x - m;
            *v += c * c;
        }
    }
    let stddev = var.into_iter().map(|v| (v / n).sqrt()).collect();
    FeatureStats { mean, stddev }
}

/// Loads a CSV file: mandatory header, numeric feature columns, label last.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidDataset("empty file, header row missing".into()))?;
    let mut names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if names.len() < 2 {
        return Err(Error::InvalidDataset(
            "header needs at least one feature column and a label column".into(),
        ));
    }
    names.pop();
    let n_features = names.len();

    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != n_features + 1 {
            return Err(Error::ParseRow {
                row,
                message: format!(
                    "ragged row: {} cells, header has {}",
                    cells.len(),
                    n_features + 1
                ),
            });
        }
        for (j, cell) in cells[..n_features].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                message: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    message: format!("non-finite cell {cell:?}"),
                });
            }
            data.push(v);
        }
        let label = cells[n_features];
        let y = match label.parse::<f64>() {
            Ok(v) if v == 0.0 => 0,
            Ok(v) if v == 1.0 => 1,
            _ => {
                return Err(Error::ParseRow {
                    row,
                    message: "label outside {0,1}".into(),
                })
            }
        };
        labels.push(y);
    }
    if labels.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "need at least 2 data rows, found {}",
            labels.len()
        )));
    }
    let rows = labels.len();
    Dataset::new(Matrix::from_vec(rows, n_features, data)?, labels, names)
}

/// Seeded shuffle split. Returns `(train, test)`; each part keeps the original
/// relative row order.
pub fn train_test_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0,1), got {test_fraction}"
        )));
    }
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "cannot split fewer than 2 rows".into(),
        ));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let (test_idx, train_idx) = order.split_at_mut(n_test);
    test_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((d.subset(train_idx)?, d.subset(test_idx)?))
}

/// Generates a synthetic stand-in for the drug-consumption task: ten
/// continuous trait scores and a label driven by interactions, a quadratic
/// and a periodic term, so linear models underfit it.
pub fn drug_like(rows: usize, seed: u64) -> Dataset {
    const NAMES: [&str; 10] = [
        "age", "education", "nscore", "escore", "oscore", "ascore", "cscore", "impulsive", "ss",
        "country",
    ];
    let mut rng = rng_from_seed(seed);
    let mut data = Vec::with_capacity(rows * NAMES.len());
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut x = [0.0f64; 10];
        for v in x.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        // Mild trait correlations.
        x[3] = 0.8 * x[3] - 0.4 * x[2];
        x[8] = 0.8 * x[8] + 0.5 * x[7];
        let noise: f64 = StandardNormal.sample(&mut rng);
        let score = 0.9 * x[2] * x[5] - 0.8 * (x[8] * x[8] - 1.0)
            + 1.2 * (1.5 * x[7]).sin()
            + 0.5 * x[0]
            + 0.3 * x[1]
            + 0.7 * (x[6].abs() - 0.8)
            + 0.4 * noise;
        data.extend_from_slice(&x);
        labels.push(u8::from(score > 0.0));
    }
    Dataset::new(
        Matrix::from_vec(rows, NAMES.len(), data).expect("shape"),
        labels,
        NAMES.iter().map(|s| s.to_string()).collect(),
    )
    .expect("generated dataset is valid")
}

/// Resolves a dataset reference: either a CSV path or `synthetic:drug-like[:rows]`.
pub fn resolve(spec: &str) -> Result<Dataset> {
    match spec.strip_prefix("synthetic:") {
        Some(rest) => {
            let mut parts = rest.split(':');
            let name = parts.next().unwrap_or_default();
            let rows = match parts.next() {
                Some(r) => r.parse().map_err(|_| {
                    Error::Config(format!("bad row count {r:?} in dataset {spec:?}"))
                })?,
                None => 1885,
            };
            match name {
                "drug-like" => Ok(drug_like(rows, 0x5eed_d7a6)),
                other => Err(Error::Config(format!("unknown synthetic dataset {other:?}"))),
            }
        }
        None => load_csv(spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file() {
        let d = parse_csv("a,b,y \n 1,2,0 \n 3,4,1").unwrap();
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.labels(), &[0, 1]);
        assert_eq!(d.feature_names(), &["a", "b"]);
        assert_eq!(d.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn rejects_bad_label_with_position() {
        let err = parse_csv("a,b,y\n1,2,2\n3,4,1\n").unwrap_err();
        assert_eq!(err.to_string(), "label outside {0,1} at row 1");
    }

    #[test]
    fn rejects_non_numeric_and_ragged() {
        let err = parse_csv("a,b,y\n1,2,0\n3,red,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, column: 2, .. }), "{err}");
        let err = parse_csv("a,b,y\n1,2,0\n3,1\n").unwrap_err();
        assert!(matches!(err, Error::ParseRow { row: 2, .. }), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_csv("/nonexistent/file.csv").unwrap_err(),
            Error::Io { .. }
        ));
    }

    #[test]
    fn stats_of_small_columns() {
        let d = Dataset::from_rows(&[[1.0, 5.0], [3.0, 5.0]], vec![0, 1]).unwrap();
        let s = feature_stats(&d);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.stddev, vec![1.0, 0.0]);
        let d = Dataset::from_rows(&[[5.0], [5.0], [5.0]], vec![0, 1, 0]).unwrap();
        assert_eq!(feature_stats(&d).stddev, vec![0.0]);
    }

    #[test]
    fn stats_match_generator() {
        let mut rng = rng_from_seed(11);
        let rows: Vec<[f64; 1]> = (0..10_000)
            .map(|_| [StandardNormal.sample(&mut rng)])
            .collect();
        let labels = (0..10_000).map(|i| (i % 2) as u8).collect();
        let s = feature_stats(&Dataset::from_rows(&rows, labels).unwrap());
        assert!(s.mean[0].abs() < 0.05, "{}", s.mean[0]);
        assert!((s.stddev[0] - 1.0).abs() < 0.05, "{}", s.stddev[0]);
    }

    fn indexed(n: usize) -> Dataset {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64]).collect();
        Dataset::from_rows(&rows, (0..n).map(|i| (i % 2) as u8).collect()).unwrap()
    }

    #[test]
    fn split_sizes_and_partition() {
        let d = indexed(100);
        let (train, test) = train_test_split(&d, 0.2, 7).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (80, 20));
        let mut all: Vec<f64> = train.rows().chain(test.rows()).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());

        let again = train_test_split(&d, 0.2, 7).unwrap();
        assert_eq!(again.1, test);
        let other = train_test_split(&d, 0.2, 8).unwrap();
        assert_ne!(other.1, test);

        let (a, b) = train_test_split(&indexed(5), 0.2, 1).unwrap();
        assert_eq!((a.n_rows(), b.n_rows()), (4, 1));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let d = indexed(10);
        assert!(train_test_split(&d, 0.0, 1).is_err());
        assert!(train_test_split(&d, 1.0, 1).is_err());
        assert!(train_test_split(&d, -0.5, 1).is_err());
    }

    #[test]
    fn drug_like_has_both_classes() {
        let d = drug_like(500, 3);
        assert_eq!(d.n_features(), 10);
        let p = d.positives() as f64 / d.n_rows() as f64;
        assert!((0.2..0.8).contains(&p), "positive rate {p}");
        assert_eq!(d, drug_like(500, 3));
    }
}
