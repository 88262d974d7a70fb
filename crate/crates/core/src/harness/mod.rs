//! Seeded single-decision audits (P1) and model sweeps (P2).
//!
//! Every `(instance, model, explainer, repetition)` is an independent task.
//! Its seed is derived from the base seed and those coordinates, and one
//! task produces the explanations for every configured K from the same
//! sample. Tasks run on a rayon pool and results are merged in task order,
//! so reports do not depend on the worker count.

pub mod config;
pub mod report;

use std::collections::HashSet;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::data::{self, feature_stats, Dataset, FeatureStats};
use crate::error::{Error, Result};
use crate::explainers::{self, LinearExplanation, Method, NeighborhoodConfig};
use crate::linalg::Matrix;
use crate::metrics;
use crate::models::{self, BlackBox, Family, ModelSpec};
use crate::rng::derive_seed;

pub use config::{InstanceSelector, RunConfig};
pub use report::{
    emit_report, load_report, load_runs_csv, parse_runs_csv, Cell, CellSummary, CsvRun, DatasetInfo, Format,
    InstanceEntry, MetricReport, ModelEntry, Run, Summary, Timing,
};

const SPLIT_TAG: u64 = 0x5b17;
const MODEL_TAG: u64 = 0x30de1;
const FIDELITY_TAG: u64 = 0xf1de;

fn family_id(f: Family) -> u64 {
    Family::ALL.iter().position(|&g| g == f).expect("family listed") as u64
}

pub fn split_seed(base: u64) -> u64 {
    derive_seed(base, &[SPLIT_TAG])
}

pub fn model_seed(base: u64, family: Family) -> u64 {
    derive_seed(base, &[MODEL_TAG, family_id(family)])
}

/// Seed of one explainer call, shared by every K of that call.
pub fn task_seed(base: u64, instance: usize, repetition: usize, method: Method, family: Family) -> u64 {
    derive_seed(base, &[instance as u64, repetition as u64, method.id(), family_id(family)])
}

pub fn fidelity_seed(task_seed: u64) -> u64 {
    derive_seed(task_seed, &[FIDELITY_TAG])
}

/// The data every task reads.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    /// Training-split statistics, used for neighbourhoods.
    pub stats: FeatureStats,
    /// Single background row: the training-split mean.
    pub background: Matrix,
    pub split_seed: u64,
}

pub fn prepare(cfg: &RunConfig, d: &Dataset) -> Result<Prepared> {
    let seed = split_seed(cfg.seed);
    let (train, test) = data::train_test_split(d, cfg.test_fraction, seed)?;
    let stats = feature_stats(&train);
    let background = Matrix::from_rows(std::slice::from_ref(&stats.mean))?;
    Ok(Prepared {
        train,
        test,
        stats,
        background,
        split_seed: seed,
    })
}

fn check_distinct<T: PartialEq + std::fmt::Debug>(name: &str, v: &[T]) -> Result<()> {
    for (i, a) in v.iter().enumerate() {
        if v[..i].contains(a) {
            return Err(Error::Config(format!("{name} lists {a:?} twice")));
        }
    }
    Ok(())
}

fn validate(cfg: &RunConfig, d: &Dataset) -> Result<()> {
    cfg.validate_for(d.n_features())?;
    check_distinct("models", &cfg.models)?;
    check_distinct("explainers", &cfg.explainers)?;
    check_distinct("k", &cfg.k)
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))
}

fn train_all(cfg: &RunConfig, p: &Prepared) -> Vec<(ModelEntry, Option<BlackBox>)> {
    cfg.models
        .par_iter()
        .map(|&family| {
            let spec = ModelSpec::new(family, model_seed(cfg.seed, family));
            match models::train(&spec, &p.train) {
                Ok(m) => (
                    ModelEntry {
                        family,
                        descriptor: Some(m.descriptor().clone()),
                        test_accuracy: Some(models::accuracy(&m, &p.test)),
                        error: None,
                    },
                    Some(m),
                ),
                Err(e) => (
                    ModelEntry {
                        family,
                        descriptor: None,
                        test_accuracy: None,
                        error: Some(format!("training {family}: {e}")),
                    },
                    None,
                ),
            }
        })
        .collect()
}

struct Group {
    instance: usize,
    model: usize,
    method: Method,
}

fn explain_task(
    cfg: &RunConfig,
    p: &Prepared,
    f: &BlackBox,
    x: &[f64],
    method: Method,
    seed: u64,
) -> Result<Vec<(LinearExplanation, metrics::MetricScores)>> {
    let lime_cfg = NeighborhoodConfig {
        samples: cfg.lime_samples,
        kernel_width: cfg.lime_kernel_width,
        ridge_alpha: cfg.lime_alpha,
        seed,
    };
    let gs = match method {
        Method::Lime => explainers::explain_lime_sizes(f, x, &p.stats, &cfg.k, &lime_cfg)?,
        Method::Shap => {
            let budget = cfg.shap_budget.unwrap_or_else(|| explainers::default_budget(x.len()));
            let attribution = explainers::shapley_sampled(f, x, &p.background, budget, seed)?;
            cfg.k
                .iter()
                .map(|&k| explainers::to_lle(&attribution, x, k))
                .collect::<Result<_>>()?
        }
    };
    let fidelity_cfg = lime_cfg.with_seed(fidelity_seed(seed));
    let scores = metrics::score_all(f, &gs, x, &p.stats, &fidelity_cfg, cfg.target)?;
    Ok(gs.into_iter().zip(scores).collect())
}

/// Runs every cell over `instances`. With `strict`, the first failure is
/// returned as an error; otherwise it is recorded on its cell.
fn execute(
    cfg: &RunConfig,
    dataset: &Dataset,
    p: Prepared,
    instances: Vec<InstanceEntry>,
    strict: bool,
) -> Result<MetricReport> {
    let started = Instant::now();
    let started_unix_seconds = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default();
    let pool = pool(cfg)?;
    let trained = pool.install(|| train_all(cfg, &p));
    if strict {
        if let Some(e) = trained.iter().find_map(|(entry, _)| entry.error.clone()) {
            return Err(Error::InvalidArgument(e));
        }
    }

    // (instance, model, explainer) groups; each yields one cell per K.
    let mut groups = Vec::new();
    for instance in 0..instances.len() {
        for model in 0..cfg.models.len() {
            for &method in &cfg.explainers {
                groups.push(Group { instance, model, method });
            }
        }
    }

    let reps = cfg.repetitions;
    let seed_of = |g: &Group, r: usize| task_seed(cfg.seed, g.instance, r, g.method, cfg.models[g.model]);
    let mut seen = HashSet::with_capacity(2 * groups.len() * reps);
    for g in &groups {
        for r in 0..reps {
            let s = seed_of(g, r);
            assert!(seen.insert(s), "derived seed collision");
            assert!(seen.insert(fidelity_seed(s)), "derived seed collision");
        }
    }

    let tasks: Vec<(usize, usize)> = (0..groups.len()).flat_map(|g| (0..reps).map(move |r| (g, r))).collect();
    let outcomes: Vec<Option<Result<Vec<(LinearExplanation, metrics::MetricScores)>>>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(g, r)| {
                let group = &groups[g];
                let model = trained[group.model].1.as_ref()?;
                let x = &instances[group.instance].values;
                Some(explain_task(cfg, &p, model, x, group.method, seed_of(group, r)))
            })
            .collect()
    });

    let mut outcomes = outcomes.into_iter();
    let mut report_cells = Vec::with_capacity(groups.len() * cfg.k.len());
    for group in &groups {
        let family = cfg.models[group.model];
        let mut cells: Vec<Cell> = cfg
            .k
            .iter()
            .map(|&k| Cell {
                instance: group.instance,
                model: family,
                explainer: group.method,
                k,
                runs: Vec::with_capacity(reps),
                summary: None,
                reiteration_similarity: None,
                first_explanation: None,
                error: None,
            })
            .collect();
        let mut explanations: Vec<Vec<LinearExplanation>> = vec![Vec::with_capacity(reps); cfg.k.len()];
        let mut error: Option<String> = None;
        for r in 0..reps {
            let seed = seed_of(group, r);
            match outcomes.next().expect("one outcome per task") {
                None => error = trained[group.model].0.error.clone(),
                Some(Err(e)) if error.is_none() => {
                    let e = e.context(format!(
                        "instance {}, model {family}, explainer {}, repetition {r}",
                        group.instance, group.method
                    ));
                    if strict {
                        return Err(e);
                    }
                    error = Some(e.to_string());
                }
                Some(Err(_)) => {}
                Some(Ok(per_k)) => {
                    for ((cell, store), (g, scores)) in cells.iter_mut().zip(&mut explanations).zip(per_k) {
                        cell.runs.push(Run {
                            repetition: r,
                            seed,
                            fidelity_seed: fidelity_seed(seed),
                            selected: g.selected.clone(),
                            scores,
                        });
                        store.push(g);
                    }
                }
            }
        }
        for (mut cell, store) in cells.into_iter().zip(explanations) {
            if error.is_some() {
                cell.error = error.clone();
                cell.runs.clear();
            } else {
                cell.summary = CellSummary::of(&cell.runs);
                if store.len() >= 2 {
                    cell.reiteration_similarity = Some(metrics::reiteration_similarity(&store)?);
                }
                cell.first_explanation = store.into_iter().next();
            }
            report_cells.push(cell);
        }
    }

    Ok(MetricReport {
        config: cfg.clone(),
        dataset: DatasetInfo {
            source: cfg.dataset.clone(),
            rows: dataset.n_rows(),
            features: dataset.n_features(),
            feature_names: dataset.feature_names().to_vec(),
            train_rows: p.train.n_rows(),
            test_rows: p.test.n_rows(),
            split_seed: p.split_seed,
        },
        models: trained.into_iter().map(|(e, _)| e).collect(),
        instances,
        cells: report_cells,
        timing: Timing {
            started_unix_seconds,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

fn instance_rows(cfg: &RunConfig, test: &Dataset) -> Result<Vec<usize>> {
    let n = test.n_rows();
    match &cfg.instances {
        InstanceSelector::Count(c) if *c > n => Err(Error::Config(format!(
            "instances.count = {c} exceeds the {n} test rows"
        ))),
        InstanceSelector::Count(c) => Ok((0..*c).collect()),
        InstanceSelector::Indices(v) => match v.iter().find(|&&i| i >= n) {
            Some(i) => Err(Error::Config(format!("test row {i} out of range 0..{n}"))),
            None => Ok(v.clone()),
        },
    }
}

/// Audits one decision: a single model and K, explained `R` times by each
/// configured explainer. Any failure aborts the run.
pub fn run_p1_on(cfg: &RunConfig, d: &Dataset, instance: &[f64]) -> Result<MetricReport> {
    validate(cfg, d)?;
    if cfg.models.len() != 1 || cfg.k.len() != 1 {
        return Err(Error::Config(
            "a single-decision audit takes exactly one model and one k".into(),
        ));
    }
    if instance.len() != d.n_features() {
        return Err(Error::Config(format!(
            "instance has {} values but the dataset has {} features",
            instance.len(),
            d.n_features()
        )));
    }
    if let Some(v) = instance.iter().find(|v| !v.is_finite()) {
        return Err(Error::Config(format!("instance contains non-finite value {v}")));
    }
    let p = prepare(cfg, d)?;
    let entry = InstanceEntry {
        test_row: None,
        values: instance.to_vec(),
    };
    execute(cfg, d, p, vec![entry], true)
}

pub fn run_p1(cfg: &RunConfig, instance: &[f64]) -> Result<MetricReport> {
    cfg.validate()?;
    let d = data::resolve(&cfg.dataset)?;
    run_p1_on(cfg, &d, instance)
}

/// The instance a single-decision audit explains: `cfg.instance` if set,
/// else the single selected test row.
pub fn p1_instance(cfg: &RunConfig, d: &Dataset) -> Result<Vec<f64>> {
    if let Some(v) = &cfg.instance {
        return Ok(v.clone());
    }
    let p = prepare(cfg, d)?;
    let row = match &cfg.instances {
        InstanceSelector::Indices(v) if v.len() == 1 => v[0],
        InstanceSelector::Indices(_) => {
            return Err(Error::Config("explain takes a single instance".into()));
        }
        InstanceSelector::Count(_) => 0,
    };
    if row >= p.test.n_rows() {
        return Err(Error::Config(format!("test row {row} out of range 0..{}", p.test.n_rows())));
    }
    Ok(p.test.row(row).to_vec())
}

/// Full cross product of instances, models, explainers and K. Failures are
/// recorded per cell and the sweep continues.
pub fn run_p2_on(cfg: &RunConfig, d: &Dataset) -> Result<MetricReport> {
    validate(cfg, d)?;
    let p = prepare(cfg, d)?;
    let rows = instance_rows(cfg, &p.test)?;
    let instances = rows
        .into_iter()
        .map(|r| InstanceEntry {
            test_row: Some(r),
            values: p.test.row(r).to_vec(),
        })
        .collect();
    execute(cfg, d, p, instances, false)
}

pub fn run_p2(cfg: &RunConfig) -> Result<MetricReport> {
    cfg.validate()?;
    let d = data::resolve(&cfg.dataset)?;
    run_p2_on(cfg, &d)
}
