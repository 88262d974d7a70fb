//! Brute-force reference implementations.
//!
//! Nothing here calls into the numerical code of [`crate::explainers`] or
//! [`crate::metrics`]: coalitions are enumerated and evaluated afresh, the
//! projection is found by searching directions, and F1 is tabulated from an
//! explicit confusion matrix. [`verify`] runs the cross-checks.

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::explainers::{self, LinearExplanation};
use crate::linalg::Matrix;
use crate::models::{Classifier, FnClassifier, MlpModel, RandomForest};
use crate::rng::rng_from_seed;

pub const BRUTEFORCE_FEATURE_CAP: usize = 12;

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Calls `visit` with every `size`-subset of `items`, in lexicographic order.
fn for_each_subset(items: &[usize], size: usize, visit: &mut dyn FnMut(&[usize])) {
    fn go(items: &[usize], size: usize, start: usize, acc: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if acc.len() == size {
            visit(acc);
            return;
        }
        for p in start..items.len() {
            if items.len() - p < size - acc.len() {
                break;
            }
            acc.push(items[p]);
            go(items, size, p + 1, acc, visit);
            acc.pop();
        }
    }
    go(items, size, 0, &mut Vec::with_capacity(size), visit);
}

fn masked_mean(f: &dyn Classifier, x: &[f64], background: &Matrix, keep: &[usize]) -> f64 {
    let mut acc = CompensatedSum::default();
    for b in background.iter_rows() {
        let mut z = b.to_vec();
        for &i in keep {
            z[i] = x[i];
        }
        acc.add(f.proba(&z));
    }
    acc.value() / background.rows() as f64
}

/// Shapley values by literal enumeration of `S ⊆ F∖{i}` with factorial weights.
pub fn shapley_bruteforce(f: &dyn Classifier, x: &[f64], background: &Matrix) -> Result<Vec<f64>> {
    let n = x.len();
    if n > BRUTEFORCE_FEATURE_CAP {
        return Err(Error::TooManyFeatures {
            features: n,
            cap: BRUTEFORCE_FEATURE_CAP,
        });
    }
    if n != f.n_features() || background.cols() != n || background.rows() == 0 {
        return Err(Error::InvalidArgument("inconsistent dimensions".into()));
    }
    let total = factorial(n);
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut acc = CompensatedSum::default();
        for size in 0..n {
            let w = (factorial(size) * factorial(n - size - 1)) as f64 / total as f64;
            for_each_subset(&others, size, &mut |s| {
                let mut with_i = s.to_vec();
                with_i.push(i);
                let gain = masked_mean(f, x, background, &with_i) - masked_mean(f, x, background, s);
                acc.add(w * gain);
            });
        }
        phi.push(acc.value());
    }
    Ok(phi)
}

/// Nearest point to `x` with `g(x′) = target`, moving only `Φ(g)`, found by
/// a refined search over unit directions in that subspace. For each
/// direction the boundary crossing is located from two evaluations of `g`;
/// crossings farther than `radius` are ignored. `steps` grid points per angle
/// and refinement level.
pub fn projection_oracle(g: &LinearExplanation, x: &[f64], target: f64, radius: f64, steps: usize) -> Result<Vec<f64>> {
    let support = g.selected.clone();
    let k = support.len();
    if k > 3 {
        return Err(Error::InvalidArgument(format!("projection oracle supports at most 3 features, got {k}")));
    }
    let gx = g.evaluate(x);
    if (gx - target).abs() <= 1e-12 {
        return Ok(x.to_vec());
    }
    let steps = steps.max(3);
    let point = |u: &[f64], s: f64| {
        let mut p = x.to_vec();
        for (&i, ui) in support.iter().zip(u) {
            p[i] += s * ui;
        }
        p
    };
    // Boundary distance along u, if reachable within the radius.
    let reach = |u: &[f64]| -> Option<f64> {
        let slope = g.evaluate(&point(u, 1.0)) - gx;
        if slope == 0.0 {
            return None;
        }
        let s = (target - gx) / slope;
        (s >= 0.0 && s <= radius).then_some(s)
    };
    let direction = |angles: &[f64]| -> Vec<f64> {
        match k {
            1 => vec![if angles[0] < 0.0 { -1.0 } else { 1.0 }],
            2 => vec![angles[0].cos(), angles[0].sin()],
            _ => vec![
                angles[1].sin() * angles[0].cos(),
                angles[1].sin() * angles[0].sin(),
                angles[1].cos(),
            ],
        }
    };

    let best = match k {
        0 => None,
        1 => [-1.0, 1.0]
            .into_iter()
            .filter_map(|a| reach(&direction(&[a])).map(|s| (s, vec![a])))
            .min_by(|a, b| a.0.total_cmp(&b.0)),
        _ => {
            let dims = k - 1;
            let mut lo = [0.0, 0.0];
            let mut hi = [std::f64::consts::TAU, std::f64::consts::PI];
            let mut best: Option<(f64, Vec<f64>)> = None;
            for _level in 0..60 {
                let pitch: Vec<f64> = (0..dims).map(|d| (hi[d] - lo[d]) / (steps - 1) as f64).collect();
                let count = steps.pow(dims as u32);
                for idx in 0..count {
                    let angles: Vec<f64> = (0..dims)
                        .map(|d| lo[d] + pitch[d] * ((idx / steps.pow(d as u32)) % steps) as f64)
                        .collect();
                    if let Some(s) = reach(&direction(&angles)) {
                        if best.as_ref().is_none_or(|(b, _)| s < *b) {
                            best = Some((s, angles));
                        }
                    }
                }
                let Some((_, ref centre)) = best else { break };
                for d in 0..dims {
                    lo[d] = centre[d] - 2.0 * pitch[d];
                    hi[d] = centre[d] + 2.0 * pitch[d];
                }
                if pitch.iter().all(|p| *p < 1e-13) {
                    break;
                }
            }
            best
        }
    };
    match best {
        Some((s, angles)) => Ok(point(&direction(&angles), s)),
        None => Err(Error::Infeasible(format!(
            "no point with g = {target} within radius {radius} along the explained features"
        ))),
    }
}

/// F1 with class `1` positive from an explicit confusion table.
pub fn f1_bruteforce(truth: &[bool], predicted: &[bool]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    // table[truth][predicted]
    let mut table = [[0u64; 2]; 2];
    for (&t, &p) in truth.iter().zip(predicted) {
        table[usize::from(t)][usize::from(p)] += 1;
    }
    let tp = table[1][1] as f64;
    let fp = table[0][1] as f64;
    let fneg = table[1][0] as f64;
    if fp == 0.0 && fneg == 0.0 {
        return Ok(1.0);
    }
    let precision_den = tp + fp;
    let recall_den = tp + fneg;
    if tp == 0.0 || precision_den == 0.0 || recall_den == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / precision_den;
    let recall = tp / recall_den;
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// A random smooth black box: an untrained network over `n` features.
pub fn random_mlp(n: usize, seed: u64) -> MlpModel {
    MlpModel::random(n, 16, seed)
}

/// A small forest fitted to random labels on random points.
pub fn random_forest(n: usize, seed: u64) -> RandomForest {
    let mut rng = rng_from_seed(seed);
    let rows: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut labels: Vec<u8> = (0..60).map(|_| rng.random_range(0..2)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let d = crate::data::Dataset::from_rows(&rows, labels).expect("valid random dataset");
    RandomForest::fit(&d, 5, 3, seed)
}

/// Random instance and background (1 to 3 rows) in `[-1,1]^n`.
pub fn random_case(n: usize, seed: u64) -> (Vec<f64>, Matrix) {
    let mut rng = rng_from_seed(seed);
    let x = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows = rng.random_range(1..=3);
    let bg: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (x, Matrix::from_rows(&bg).expect("rectangular"))
}

/// Random explanation over `support` features out of `n`.
pub fn random_explanation(n: usize, support: usize, seed: u64) -> (LinearExplanation, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for j in 0..support {
        let p = rng.random_range(j..n);
        idx.swap(j, p);
    }
    let ranked: Vec<(usize, f64)> = idx[..support]
        .iter()
        .map(|&i| {
            let mag = rng.random_range(0.2..1.5);
            (i, if rng.random::<bool>() { mag } else { -mag })
        })
        .collect();
    let g = LinearExplanation::new(
        explainers::Method::Lime,
        seed,
        support,
        rng.random_range(-0.5..0.5),
        ranked,
        Default::default(),
    );
    let x = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (g, x)
}

/// Cross-checks every main-path algorithm against its oracle.
pub fn verify(seed: u64, cases: usize) -> Vec<CheckOutcome> {
    let mut out = Vec::new();

    let mut max_diff = 0.0f64;
    let mut max_gap = 0.0f64;
    let mut failures = Vec::new();
    for c in 0..cases {
        let case_seed = crate::rng::derive_seed(seed, &[c as u64]);
        let n = 1 + c % 8;
        let (x, bg) = random_case(n, case_seed);
        let forest;
        let mlp;
        let f: &dyn Classifier = if c % 2 == 0 {
            mlp = random_mlp(n, case_seed);
            &mlp
        } else {
            forest = random_forest(n, case_seed);
            &forest
        };
        match (explainers::shapley_exact(f, &x, &bg), shapley_bruteforce(f, &x, &bg)) {
            (Ok(a), Ok(b)) => {
                let d = a.phi.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                max_diff = max_diff.max(d);
                max_gap = max_gap.max(a.efficiency_gap());
            }
            (Err(e), _) | (_, Err(e)) => failures.push(e.to_string()),
        }
    }
    out.push(CheckOutcome::new(
        "shapley_exact matches brute-force enumeration",
        failures.is_empty() && max_diff < 1e-9,
        format!("{cases} cases, max |Δφ| = {max_diff:.3e}{}", failures.first().map(|e| format!(", error: {e}")).unwrap_or_default()),
    ));
    out.push(CheckOutcome::new(
        "shapley_exact efficiency",
        failures.is_empty() && max_gap < 1e-9,
        format!("max |φ0 + Σφ − f(x)| = {max_gap:.3e}"),
    ));

    // Null player: feature 2 is never read.
    let f = FnClassifier::new(4, |x| 1.0 / (1.0 + (-(x[0] * x[1] - x[3])).exp()));
    let (x, bg) = random_case(4, seed ^ 1);
    let null = explainers::shapley_exact(&f, &x, &bg).map(|a| a.phi[2].abs());
    out.push(CheckOutcome::new(
        "shapley_exact null player",
        matches!(null, Ok(v) if v < 1e-9),
        format!("|φ_null| = {null:?}"),
    ));

    // Symmetry: f symmetric in features 0 and 1, equal inputs, symmetric background.
    let f = FnClassifier::new(3, |x| (0.3 * x[0] + 0.3 * x[1] + x[0] * x[1] * x[2]).tanh() * 0.5 + 0.5);
    let bg = Matrix::from_rows(&[[0.1, 0.1, -0.4], [0.7, 0.7, 0.2]]).expect("rectangular");
    let sym = explainers::shapley_exact(&f, &[0.6, 0.6, 0.9], &bg).map(|a| (a.phi[0] - a.phi[1]).abs());
    out.push(CheckOutcome::new(
        "shapley_exact symmetry",
        matches!(sym, Ok(v) if v < 1e-9),
        format!("|φ0 − φ1| = {sym:?}"),
    ));

    let mlp = random_mlp(10, seed);
    let (x, bg) = random_case(10, seed ^ 2);
    let same = explainers::shapley_sampled(&mlp, &x, &bg, explainers::default_budget(10), seed)
        .and_then(|s| explainers::shapley_exact(&mlp, &x, &bg).map(|e| s.phi == e.phi));
    out.push(CheckOutcome::new(
        "shapley_sampled delegates to exact enumeration when 2^F <= budget",
        matches!(same, Ok(true)),
        format!("bit-identical: {same:?}"),
    ));

    let mut max_err = 0.0f64;
    let mut max_resid = 0.0f64;
    let mut errors = Vec::new();
    for c in 0..cases.min(50) {
        let s = crate::rng::derive_seed(seed, &[0x9e0, c as u64]);
        let (g, x) = random_explanation(6, 2 + c % 2, s);
        let fast = crate::metrics::prescriptive_point(&g, &x, 0.5);
        let slow = projection_oracle(&g, &x, 0.5, 100.0, 41);
        match (fast, slow) {
            (Ok(p), Ok(o)) => {
                let d = p.x_prime.iter().zip(&o).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                max_err = max_err.max(d);
                max_resid = max_resid.max((g.evaluate(&p.x_prime) - 0.5).abs());
            }
            (Err(e), _) | (_, Err(e)) => errors.push(e.to_string()),
        }
    }
    out.push(CheckOutcome::new(
        "prescriptive_point matches the direction-search oracle",
        errors.is_empty() && max_err < 1e-3 && max_resid < 1e-9,
        format!("max |Δx′| = {max_err:.3e}, max |g(x′) − y′| = {max_resid:.3e}"),
    ));

    let mut rng = rng_from_seed(seed ^ 3);
    let mut max_f1 = 0.0f64;
    for _ in 0..cases {
        let bias: f64 = rng.random();
        let a: Vec<bool> = (0..1000).map(|_| rng.random::<f64>() < bias).collect();
        let b: Vec<bool> = (0..1000).map(|_| rng.random::<f64>() < bias).collect();
        let d = (crate::metrics::f1_score(&a, &b).unwrap_or(f64::NAN) - f1_bruteforce(&a, &b).unwrap_or(f64::NAN)).abs();
        max_f1 = max_f1.max(if d.is_nan() { f64::INFINITY } else { d });
    }
    out.push(CheckOutcome::new(
        "f1_score matches confusion-table oracle",
        max_f1 < 1e-12,
        format!("max |ΔF1| = {max_f1:.3e}"),
    ));
    out
}
