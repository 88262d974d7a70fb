//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::Method;
use crate::models::Family;

/// Which test-split rows a sweep explains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSelector {
    /// The first `n` rows of the test split.
    Count(usize),
    /// Explicit test-split row indices.
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// CSV path or `synthetic:drug-like[:rows]`.
    pub dataset: String,
    pub test_fraction: f64,
    pub models: Vec<Family>,
    pub explainers: Vec<Method>,
    pub k: Vec<usize>,
    pub repetitions: usize,
    pub instances: InstanceSelector,
    /// Explicit feature vector for a single-decision audit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<Vec<f64>>,
    pub lime_samples: usize,
    pub lime_alpha: f64,
    pub lime_kernel_width: Option<f64>,
    /// `None` means `2F + 2^11`.
    pub shap_budget: Option<usize>,
    pub target: f64,
    pub seed: u64,
    /// Thread count, `0` for all cores. Not echoed into reports since it
    /// cannot change results.
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub output_json: Option<PathBuf>,
    #[serde(skip)]
    pub output_csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: String::new(),
            test_fraction: 0.2,
            models: vec![Family::Rf],
            explainers: vec![Method::Lime, Method::Shap],
            k: vec![4],
            repetitions: 50,
            instances: InstanceSelector::Count(100),
            instance: None,
            lime_samples: 5000,
            lime_alpha: 1.0,
            lime_kernel_width: None,
            shap_budget: None,
            target: 0.5,
            seed: 0,
            workers: 0,
            output_json: None,
            output_csv: None,
        }
    }
}

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("dataset", "CSV path or synthetic:drug-like[:rows]"),
    ("dataset.test_fraction", "fraction of rows held out for testing"),
    ("models", "comma list of lin, log, rf, kn, mlp"),
    ("explainers", "comma list of lime, shap"),
    ("k", "comma list of explanation sizes"),
    ("repetitions", "explanations per instance (R)"),
    ("instances.count", "explain the first N test rows"),
    ("instances.indices", "comma list of test-row indices to explain"),
    ("instance", "comma list of feature values to explain (explain only)"),
    ("lime.samples", "neighbourhood size H for LIME and fidelity"),
    ("lime.alpha", "ridge penalty"),
    ("lime.kernel_width", "kernel width, default 0.75*sqrt(F)"),
    ("shap.budget", "coalition budget, default 2F+2^11"),
    ("target", "boundary value y' for prescriptivity"),
    ("seed", "base seed"),
    ("workers", "worker threads, 0 for all cores"),
    ("output.json", "write the JSON report here"),
    ("output.csv", "write one CSV row per run here"),
];

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value:?}: {what}"))
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| bad(key, value, std::any::type_name::<T>()))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value {
        "" | "auto" | "default" => Ok(None),
        v => scalar(key, v).map(Some),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "dataset" => self.dataset = value.to_string(),
            "dataset.test_fraction" => self.test_fraction = scalar(key, value)?,
            "models" => {
                self.models = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Family::from_str)
                    .collect::<Result<_>>()?
            }
            "explainers" => {
                self.explainers = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Method::from_str)
                    .collect::<Result<_>>()?
            }
            "k" => self.k = list(key, value)?,
            "repetitions" => self.repetitions = scalar(key, value)?,
            "instances.count" => self.instances = InstanceSelector::Count(scalar(key, value)?),
            "instances.indices" => self.instances = InstanceSelector::Indices(list(key, value)?),
            "instance" => self.instance = Some(list(key, value)?),
            "lime.samples" => self.lime_samples = scalar(key, value)?,
            "lime.alpha" => self.lime_alpha = scalar(key, value)?,
            "lime.kernel_width" => self.lime_kernel_width = optional(key, value)?,
            "shap.budget" => self.shap_budget = optional(key, value)?,
            "target" => self.target = scalar(key, value)?,
            "seed" => self.seed = parse_seed(value).ok_or_else(|| bad(key, value, "u64"))?,
            "workers" => self.workers = scalar(key, value)?,
            "output.json" => self.output_json = Some(PathBuf::from(value)),
            "output.csv" => self.output_csv = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, config_message(e))))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), config_message(e))))
    }

    /// Renders the configuration back to `key = value` text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("dataset", self.dataset.clone());
        put("dataset.test_fraction", self.test_fraction.to_string());
        put("models", join(&self.models));
        put("explainers", join(&self.explainers));
        put("k", join(&self.k));
        put("repetitions", self.repetitions.to_string());
        match &self.instances {
            InstanceSelector::Count(n) => put("instances.count", n.to_string()),
            InstanceSelector::Indices(v) => put("instances.indices", join(v)),
        }
        if let Some(v) = &self.instance {
            put("instance", join(v));
        }
        put("lime.samples", self.lime_samples.to_string());
        put("lime.alpha", self.lime_alpha.to_string());
        put("lime.kernel_width", self.lime_kernel_width.map_or("auto".into(), |v| v.to_string()));
        put("shap.budget", self.shap_budget.map_or("auto".into(), |v| v.to_string()));
        put("target", self.target.to_string());
        put("seed", self.seed.to_string());
        put("workers", self.workers.to_string());
        if let Some(p) = &self.output_json {
            put("output.json", p.display().to_string());
        }
        if let Some(p) = &self.output_csv {
            put("output.csv", p.display().to_string());
        }
        s
    }

    /// Checks everything that does not need the dataset.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.dataset.is_empty() {
            return fail("dataset is not set".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!("dataset.test_fraction must lie in (0,1), got {}", self.test_fraction));
        }
        if self.models.is_empty() || self.explainers.is_empty() || self.k.is_empty() {
            return fail("models, explainers and k each need at least one value".into());
        }
        if self.k.contains(&0) {
            return fail("k values must be positive".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        match &self.instances {
            InstanceSelector::Count(0) => return fail("instances.count must be at least 1".into()),
            InstanceSelector::Indices(v) if v.is_empty() => return fail("instances.indices is empty".into()),
            _ => {}
        }
        if self.lime_samples == 0 {
            return fail("lime.samples must be at least 1".into());
        }
        if !(self.lime_alpha >= 0.0 && self.lime_alpha.is_finite()) {
            return fail(format!("lime.alpha must be non-negative, got {}", self.lime_alpha));
        }
        if let Some(g) = self.lime_kernel_width {
            if !(g > 0.0 && g.is_finite()) {
                return fail(format!("lime.kernel_width must be positive, got {g}"));
            }
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return fail(format!("target must lie in (0,1), got {}", self.target));
        }
        Ok(())
    }

    /// Checks the parts that depend on the feature count.
    pub fn validate_for(&self, n_features: usize) -> Result<()> {
        self.validate()?;
        if let Some(&k) = self.k.iter().find(|&&k| k > n_features) {
            return Err(Error::Config(format!("k = {k} exceeds the feature count {n_features}")));
        }
        if let Some(b) = self.shap_budget {
            if self.explainers.contains(&Method::Shap) && b < 2 * n_features + 2 {
                return Err(Error::Config(format!(
                    "shap.budget = {b} is below the minimum 2F+2 = {}",
                    2 * n_features + 2
                )));
            }
        }
        if let Some(v) = &self.instance {
            if v.len() != n_features {
                return Err(Error::Config(format!(
                    "instance has {} values but the dataset has {n_features} features",
                    v.len()
                )));
            }
        }
        Ok(())
    }
}

fn config_message(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

/// Decimal or `0x` hexadecimal.
pub fn parse_seed(s: &str) -> Option<u64> {
    let s = s.trim().replace('_', "");
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}
