use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::{LinearExplanation, Method};
use crate::harness::config::RunConfig;
use crate::metrics::MetricScores;
use crate::models::{Family, ModelDescriptor};

/// Five-number summary plus mean, quartiles by linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            n: v.len(),
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
            mean: values.iter().sum::<f64>() / values.len() as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub rows: usize,
    pub features: usize,
    pub feature_names: Vec<String>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub family: Family,
    pub descriptor: Option<ModelDescriptor>,
    pub test_accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    /// Row of the test split, absent for a user-supplied vector.
    pub test_row: Option<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub repetition: usize,
    /// Seed of the explainer call.
    pub seed: u64,
    /// Seed of the fresh fidelity neighbourhood.
    pub fidelity_seed: u64,
    pub selected: Vec<usize>,
    pub scores: MetricScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub conciseness: Summary,
    pub local_fidelity: Summary,
    pub local_concordance: Summary,
    /// Over the runs where prescriptivity is defined.
    pub prescriptivity: Option<Summary>,
    pub prescriptivity_undefined: usize,
}

impl CellSummary {
    pub fn of(runs: &[Run]) -> Option<Self> {
        let col = |f: fn(&MetricScores) -> f64| runs.iter().map(|r| f(&r.scores)).collect::<Vec<_>>();
        let defined: Vec<f64> = runs.iter().filter_map(|r| r.scores.prescriptivity).collect();
        Some(Self {
            conciseness: Summary::of(&col(|s| s.conciseness as f64))?,
            local_fidelity: Summary::of(&col(|s| s.local_fidelity))?,
            local_concordance: Summary::of(&col(|s| s.local_concordance))?,
            prescriptivity_undefined: runs.len() - defined.len(),
            prescriptivity: Summary::of(&defined),
        })
    }
}

/// One (instance, model, explainer, K) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Position in [`MetricReport::instances`].
    pub instance: usize,
    pub model: Family,
    pub explainer: Method,
    pub k: usize,
    pub runs: Vec<Run>,
    pub summary: Option<CellSummary>,
    /// Mean pairwise Jaccard over the runs; needs at least two runs.
    pub reiteration_similarity: Option<f64>,
    pub first_explanation: Option<LinearExplanation>,
    pub error: Option<String>,
}

/// Excluded from determinism comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub config: RunConfig,
    pub dataset: DatasetInfo,
    pub models: Vec<ModelEntry>,
    pub instances: Vec<InstanceEntry>,
    pub cells: Vec<Cell>,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: &str = "instance,test_row,model,explainer,k,repetition,seed,fidelity_seed,conciseness,local_fidelity,local_concordance,prescriptivity,selected";

impl MetricReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the timing block zeroed, for byte comparisons.
    pub fn to_json_untimed(&self) -> Result<String> {
        let mut r = self.clone();
        r.timing = Timing {
            started_unix_seconds: 0,
            wall_clock_seconds: 0.0,
        };
        r.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per run of every successful cell.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for c in &self.cells {
            let test_row = self
                .instances
                .get(c.instance)
                .and_then(|i| i.test_row)
                .map(|r| r.to_string())
                .unwrap_or_default();
            for r in &c.runs {
                let selected = r.selected.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";");
                let presc = r.scores.prescriptivity.map(|p| p.to_string()).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    c.instance,
                    test_row,
                    c.model,
                    c.explainer,
                    c.k,
                    r.repetition,
                    r.seed,
                    r.fidelity_seed,
                    r.scores.conciseness,
                    r.scores.local_fidelity,
                    r.scores.local_concordance,
                    presc,
                    selected
                );
            }
        }
        s
    }

    pub fn summaries(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.error.is_none())
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

pub fn emit_report(r: &MetricReport, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        Format::Json => r.to_json()?,
        Format::Csv => r.to_csv(),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<MetricReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    MetricReport::from_json(&text)
}

/// A parsed CSV run row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRun {
    pub instance: usize,
    pub test_row: Option<usize>,
    pub model: Family,
    pub explainer: Method,
    pub k: usize,
    pub repetition: usize,
    pub seed: u64,
    pub fidelity_seed: u64,
    pub conciseness: usize,
    pub local_fidelity: f64,
    pub local_concordance: f64,
    pub prescriptivity: Option<f64>,
    pub selected: Vec<usize>,
}

pub fn parse_runs_csv(text: &str) -> Result<Vec<CsvRun>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::ParseRow {
            row: 0,
            message: "unexpected CSV header".into(),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let row = i + 1;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 13 {
                return Err(Error::ParseRow {
                    row,
                    message: format!("expected 13 cells, found {}", cells.len()),
                });
            }
            let num = |c: usize| -> Result<f64> {
                cells[c].parse().map_err(|_| Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("non-numeric cell {:?}", cells[c]),
                })
            };
            let int = |c: usize| -> Result<u64> {
                cells[c].parse().map_err(|_| Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("non-integer cell {:?}", cells[c]),
                })
            };
            Ok(CsvRun {
                instance: int(0)? as usize,
                test_row: if cells[1].is_empty() { None } else { Some(int(1)? as usize) },
                model: cells[2].parse()?,
                explainer: cells[3].parse()?,
                k: int(4)? as usize,
                repetition: int(5)? as usize,
                seed: int(6)?,
                fidelity_seed: int(7)?,
                conciseness: int(8)? as usize,
                local_fidelity: num(9)?,
                local_concordance: num(10)?,
                prescriptivity: if cells[11].is_empty() { None } else { Some(num(11)?) },
                selected: if cells[12].is_empty() {
                    Vec::new()
                } else {
                    cells[12]
                        .split(';')
                        .map(|s| {
                            s.parse().map_err(|_| Error::Parse {
                                row,
                                column: 13,
                                message: format!("bad index {s:?}"),
                            })
                        })
                        .collect::<Result<_>>()?
                },
            })
        })
        .collect()
}

pub fn load_runs_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRun>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_runs_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 1.75, 2.5, 3.25, 4.0));
        assert_eq!(s.mean, 2.5);
        let one = Summary::of(&[0.7]).unwrap();
        assert_eq!((one.q1, one.q3), (0.7, 0.7));
        assert!(Summary::of(&[]).is_none());
    }
}
