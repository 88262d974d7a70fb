//! Quality scores for a linear explanation `g` of a black box `f` at `x`.
//!
//! All scores except conciseness lie in `[0,1]`, `1` being best. The hinge
//! `ℓ(k) = max(0, 1 − k)` maps an absolute disagreement to a score.
//!
//! The prescriptive point is the minimum-norm move along the explained
//! features that lands on `g = y′`:
//! `hᵢ = (y′ − g(x)) wᵢ / Σⱼ wⱼ²` for `i ∈ Φ(g)`. The per-feature form
//! `hᵢ = (y′ − g(x)) / wᵢ` only satisfies the boundary equation when a
//! single feature is explained, so it is not used.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::FeatureStats;
use crate::error::{Error, Result};
use crate::explainers::{sample_neighborhood, LinearExplanation, NeighborhoodConfig};
use crate::models::Classifier;

pub fn hinge(k: f64) -> f64 {
    (1.0 - k).max(0.0)
}

/// Number of non-zero weights, `|Φ(g)|`.
pub fn conciseness(g: &LinearExplanation) -> usize {
    g.selected.len()
}

/// F1 agreement, class `1` positive, of thresholded `f` and `g` on a fresh
/// neighbourhood of `x` drawn with `cfg.seed`.
pub fn local_fidelity(
    f: &dyn Classifier,
    g: &LinearExplanation,
    x: &[f64],
    stats: &FeatureStats,
    cfg: &NeighborhoodConfig,
) -> Result<f64> {
    let n = sample_neighborhood(x, stats, cfg)?;
    let truth: Vec<bool> = n.iter_rows().map(|z| f.proba(z) >= 0.5).collect();
    let surrogate: Vec<bool> = n.iter_rows().map(|z| g.evaluate(z) >= 0.5).collect();
    f1_score(&truth, &surrogate)
}

/// F1 of `predicted` against `truth`.
///
/// Identical single-class vectors score 1; a zero denominator otherwise scores 0.
pub fn f1_score(truth: &[bool], predicted: &[bool]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::InvalidArgument(format!(
            "F1 inputs differ in length ({} vs {})",
            truth.len(),
            predicted.len()
        )));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => {}
        }
    }
    if fp == 0 && fneg == 0 {
        return Ok(1.0);
    }
    let denom = 2 * tp + fp + fneg;
    Ok(if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 })
}

/// `ℓ(|f(x) − g(x)|)` for an already truncated `g`.
pub fn local_concordance(f: &dyn Classifier, g: &LinearExplanation, x: &[f64]) -> f64 {
    hinge((f.proba(x) - g.evaluate(x)).abs())
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets counted as identical.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Mean Jaccard similarity of `Φ(g)` over all unordered pairs of distinct runs.
pub fn reiteration_similarity(explanations: &[LinearExplanation]) -> Result<f64> {
    let r = explanations.len();
    if r < 2 {
        return Err(Error::InvalidArgument(format!(
            "reiteration similarity needs at least 2 explanations, got {r}"
        )));
    }
    let mut total = 0.0;
    for i in 0..r {
        for j in i + 1..r {
            total += jaccard(&explanations[i].selected, &explanations[j].selected);
        }
    }
    Ok(total / (r * (r - 1) / 2) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrescriptivePoint {
    pub x_prime: Vec<f64>,
    /// `x′ − x`, zero outside `Φ(g)`.
    pub delta: Vec<f64>,
    pub target: f64,
    /// `max(y′, 1 − y′)`.
    pub normalizer: f64,
    /// False when `g` has no non-zero weight, so no move can reach the boundary.
    pub defined: bool,
}

fn check_target(y: f64) -> Result<()> {
    if y > 0.0 && y < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("target boundary must lie in (0,1), got {y}")))
    }
}

/// Closest point to `x`, moving only the explained features, with `g(x′) = y′`.
pub fn prescriptive_point(g: &LinearExplanation, x: &[f64], target: f64) -> Result<PrescriptivePoint> {
    check_target(target)?;
    let norm2: f64 = g.weights.values().map(|w| w * w).sum();
    let normalizer = target.max(1.0 - target);
    let mut delta = vec![0.0; x.len()];
    if norm2 == 0.0 {
        return Ok(PrescriptivePoint {
            x_prime: x.to_vec(),
            delta,
            target,
            normalizer,
            defined: false,
        });
    }
    let step = (target - g.evaluate(x)) / norm2;
    for (&i, w) in &g.weights {
        delta[i] = step * w;
    }
    let x_prime = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
    Ok(PrescriptivePoint {
        x_prime,
        delta,
        target,
        normalizer,
        defined: true,
    })
}

/// `ℓ(|f(x′) − y′| / C)`; `None` when the prescriptive point is undefined.
pub fn prescriptivity(f: &dyn Classifier, g: &LinearExplanation, x: &[f64], target: f64) -> Result<Option<f64>> {
    let p = prescriptive_point(g, x, target)?;
    if !p.defined {
        return Ok(None);
    }
    Ok(Some(hinge((f.proba(&p.x_prime) - target).abs() / p.normalizer)))
}

pub const UNDEFINED_PRESCRIPTIVITY: &str = "explanation has no non-zero weight, so no boundary point exists";

/// Scores of one explanation. `reiteration_similarity` is filled in when a
/// set of repeated explanations is aggregated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub conciseness: usize,
    pub local_fidelity: f64,
    pub local_concordance: f64,
    pub prescriptivity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prescriptivity_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reiteration_similarity: Option<f64>,
}

/// Computes every per-explanation score. The fidelity neighbourhood uses
/// `fidelity_cfg.seed`, which callers keep distinct from the explainer seed.
pub fn score(
    f: &dyn Classifier,
    g: &LinearExplanation,
    x: &[f64],
    stats: &FeatureStats,
    fidelity_cfg: &NeighborhoodConfig,
    target: f64,
) -> Result<MetricScores> {
    score_all(f, std::slice::from_ref(g), x, stats, fidelity_cfg, target).map(|mut v| v.remove(0))
}

/// [`score`] for several explanations of the same `x`, sharing one fidelity
/// neighbourhood and its black-box outputs.
pub fn score_all(
    f: &dyn Classifier,
    gs: &[LinearExplanation],
    x: &[f64],
    stats: &FeatureStats,
    fidelity_cfg: &NeighborhoodConfig,
    target: f64,
) -> Result<Vec<MetricScores>> {
    let n = sample_neighborhood(x, stats, fidelity_cfg)?;
    let truth: Vec<bool> = n.iter_rows().map(|z| f.proba(z) >= 0.5).collect();
    let fx = f.proba(x);
    gs.iter()
        .map(|g| {
            let surrogate: Vec<bool> = n.iter_rows().map(|z| g.evaluate(z) >= 0.5).collect();
            let prescriptivity = prescriptivity(f, g, x, target)?;
            Ok(MetricScores {
                conciseness: conciseness(g),
                local_fidelity: f1_score(&truth, &surrogate)?,
                local_concordance: hinge((fx - g.evaluate(x)).abs()),
                prescriptivity_reason: prescriptivity
                    .is_none()
                    .then(|| UNDEFINED_PRESCRIPTIVITY.to_string()),
                prescriptivity,
                reiteration_similarity: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explainers::Method;
    use crate::models::FnClassifier;

    fn lle(intercept: f64, w: &[(usize, f64)]) -> LinearExplanation {
        LinearExplanation::new(Method::Lime, 0, w.len().max(1), intercept, w.iter().copied(), Default::default())
    }

    fn with_set(set: &[usize]) -> LinearExplanation {
        lle(0.0, &set.iter().map(|&i| (i, 1.0)).collect::<Vec<_>>())
    }

    #[test]
    fn conciseness_counts_nonzero() {
        assert_eq!(conciseness(&lle(0.0, &[(1, 0.5), (3, -0.2)])), 2);
        assert_eq!(conciseness(&lle(0.0, &[(1, 0.0)])), 0);
    }

    #[test]
    fn f1_conventions() {
        let t = [true, true, true, false, false];
        let p = [true, true, false, true, false];
        assert!((f1_score(&t, &p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(&[false; 4], &[false; 4]).unwrap(), 1.0);
        assert_eq!(f1_score(&[true; 4], &[true; 4]).unwrap(), 1.0);
        assert_eq!(f1_score(&[true, true], &[false, false]).unwrap(), 0.0);
        assert_eq!(f1_score(&[false, false], &[true, false]).unwrap(), 0.0);
        assert!(f1_score(&[true], &[true, false]).is_err());
    }

    #[test]
    fn fidelity_of_self_explanation() {
        let f = FnClassifier::new(2, |x| (0.5 + 0.2 * x[0] - 0.1 * x[1]).clamp(0.0, 1.0));
        let g = lle(0.5, &[(0, 0.2), (1, -0.1)]);
        let st = FeatureStats {
            mean: vec![0.0; 2],
            stddev: vec![1.0, 1.0],
        };
        let cfg = NeighborhoodConfig::default().with_seed(3);
        assert_eq!(local_fidelity(&f, &g, &[0.1, 0.2], &st, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn concordance_cases() {
        let f = FnClassifier::new(1, |_| 0.72);
        assert!((local_concordance(&f, &lle(0.67, &[]), &[0.0]) - 0.95).abs() < 1e-12);
        assert_eq!(local_concordance(&f, &lle(0.72, &[]), &[0.0]), 1.0);
        assert_eq!(local_concordance(&f, &lle(-0.5, &[]), &[0.0]), 0.0);
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard(&[1, 2, 3, 4], &[4, 3, 2, 1]), 1.0);
        assert_eq!(jaccard(&[1, 2], &[3, 4]), 0.0);
        assert!((jaccard(&[1, 2, 3, 4], &[1, 2, 3, 5]) - 0.6).abs() < 1e-15);
        assert_eq!(jaccard(&[], &[]), 1.0);
    }

    #[test]
    fn reiteration_cases() {
        let same = vec![with_set(&[1, 2]); 5];
        assert_eq!(reiteration_similarity(&same).unwrap(), 1.0);
        let mixed = [with_set(&[1, 2, 3, 4]), with_set(&[1, 2, 3, 4]), with_set(&[1, 2, 3, 5])];
        assert!((reiteration_similarity(&mixed).unwrap() - 2.2 / 3.0).abs() < 1e-12);
        assert!(reiteration_similarity(&mixed[..1]).is_err());
    }

    #[test]
    fn projection_two_features() {
        let g = lle(0.0, &[(0, 1.0), (1, 1.0)]);
        let p = prescriptive_point(&g, &[0.0, 0.0], 0.5).unwrap();
        assert!(p.defined);
        assert!((p.x_prime[0] - 0.25).abs() < 1e-15 && (p.x_prime[1] - 0.25).abs() < 1e-15);
        assert!((g.evaluate(&p.x_prime) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn projection_one_feature_and_support() {
        let g = lle(0.2, &[(1, 0.6)]);
        let p = prescriptive_point(&g, &[7.0, 0.0, -3.0], 0.5).unwrap();
        assert!((p.x_prime[1] - 0.5).abs() < 1e-12);
        assert_eq!(p.delta[0], 0.0);
        assert_eq!(p.delta[2], 0.0);
    }

    #[test]
    fn projection_undefined_without_weights() {
        let g = lle(0.3, &[]);
        let p = prescriptive_point(&g, &[1.0], 0.5).unwrap();
        assert!(!p.defined);
        let f = FnClassifier::new(1, |_| 0.5);
        assert_eq!(prescriptivity(&f, &g, &[1.0], 0.5).unwrap(), None);
        assert!(prescriptive_point(&g, &[1.0], 1.0).is_err());
    }

    #[test]
    fn prescriptivity_cases() {
        let g = lle(0.1, &[(0, 0.4)]);
        let same = FnClassifier::new(1, |x| 0.1 + 0.4 * x[0]);
        assert!((prescriptivity(&same, &g, &[2.0], 0.5).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let near = FnClassifier::new(1, |_| 0.49);
        assert!((prescriptivity(&near, &g, &[2.0], 0.5).unwrap().unwrap() - 0.98).abs() < 1e-12);
        let far = FnClassifier::new(1, |_| 1.0);
        assert_eq!(prescriptivity(&far, &g, &[2.0], 0.5).unwrap().unwrap(), 0.0);
    }
}
