use leaf::explainers::{explain_lime, explain_lime_sizes, fit_lime};
use leaf::metrics::reiteration_similarity;
use leaf::models::{train, Family, ModelSpec};
use leaf::{data, FeatureStats, FnClassifier, NeighborhoodConfig};

fn stats(mean: Vec<f64>, stddev: Vec<f64>) -> FeatureStats {
    FeatureStats { mean, stddev }
}

#[test]
fn single_informative_feature_is_selected() {
    let f = FnClassifier::new(3, |x: &[f64]| (0.1 + 0.8 * x[0]).clamp(0.0, 1.0));
    let s = stats(vec![0.5; 3], vec![0.05; 3]);
    let x = [0.5, 0.2, 0.9];
    let g = explain_lime(&f, &x, &s, 1, &NeighborhoodConfig::default().with_seed(3)).unwrap();
    assert_eq!(g.selected, vec![0]);
    let w = g.weight(0);
    assert!((w - 0.8).abs() <= 0.08, "w_1 = {w}");
}

#[test]
fn full_size_recovers_linear_coefficients() {
    let c = [0.05, -0.02, 0.03, 0.04];
    let f = FnClassifier::new(4, move |x: &[f64]| 0.5 + c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
    let s = stats(vec![0.0; 4], vec![1.0, 2.0, 1.5, 0.5]);
    let x = [0.3, -0.4, 0.1, 0.8];
    let g = explain_lime(&f, &x, &s, 4, &NeighborhoodConfig::default().with_seed(9)).unwrap();
    for (i, want) in c.iter().enumerate() {
        let got = g.weight(i);
        assert!((got - want).abs() <= 0.05 * want.abs(), "feature {i}: {got} vs {want}");
    }
}

#[test]
fn objective_path_is_non_increasing() {
    let d = data::drug_like(400, 5);
    let m = train(&ModelSpec::new(Family::Rf, 1), &d).unwrap();
    let s = data::feature_stats(&d);
    let fit = fit_lime(&m, d.row(3), &s, 10, &NeighborhoodConfig::default().with_seed(4)).unwrap();
    assert_eq!(fit.objective_path.len(), 11);
    for w in fit.objective_path.windows(2) {
        assert!(w[1] <= w[0], "{:?}", fit.objective_path);
    }
}

#[test]
fn sizes_match_individual_calls_and_nest() {
    let d = data::drug_like(400, 6);
    let m = train(&ModelSpec::new(Family::Mlp, 2), &d).unwrap();
    let s = data::feature_stats(&d);
    let cfg = NeighborhoodConfig { samples: 1000, ..Default::default() }.with_seed(12);
    let ks = [2, 5, 3];
    let many = explain_lime_sizes(&m, d.row(0), &s, &ks, &cfg).unwrap();
    for (g, &k) in many.iter().zip(&ks) {
        assert_eq!(*g, explain_lime(&m, d.row(0), &s, k, &cfg).unwrap());
    }
    assert_eq!(many[1].selected[..2], many[0].selected[..]);
}

#[test]
fn deterministic_per_seed() {
    let d = data::drug_like(300, 7);
    let m = train(&ModelSpec::new(Family::Kn, 0), &d).unwrap();
    let s = data::feature_stats(&d);
    let cfg = NeighborhoodConfig { samples: 800, ..Default::default() }.with_seed(1);
    let a = explain_lime(&m, d.row(1), &s, 4, &cfg).unwrap();
    let b = explain_lime(&m, d.row(1), &s, 4, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rf_explanations_vary_across_seeds() {
    let d = data::drug_like(1000, 8);
    let m = train(&ModelSpec::new(Family::Rf, 3), &d).unwrap();
    let s = data::feature_stats(&d);
    let rs: Vec<f64> = (0..5)
        .map(|i| {
            let runs: Vec<_> = (0..50)
                .map(|r| explain_lime(&m, d.row(i), &s, 4, &NeighborhoodConfig::default().with_seed(100 + r)).unwrap())
                .collect();
            reiteration_similarity(&runs).unwrap()
        })
        .collect();
    assert!(rs.iter().any(|&v| v < 1.0), "reiteration similarity {rs:?}");
}

#[test]
fn zero_spread_feature_never_selected() {
    let f = FnClassifier::new(3, |x: &[f64]| (0.5 + 0.1 * x[0] + 0.1 * x[1] + 0.1 * x[2]).clamp(0.0, 1.0));
    let s = stats(vec![0.0; 3], vec![1.0, 0.0, 1.0]);
    let g = explain_lime(&f, &[0.0; 3], &s, 3, &NeighborhoodConfig::default()).unwrap();
    assert!(!g.selected.contains(&1));
    assert!(g.evaluate(&[0.0; 3]).is_finite());
}

#[test]
fn k_out_of_range_rejected() {
    let f = FnClassifier::new(2, |_: &[f64]| 0.5);
    let s = stats(vec![0.0; 2], vec![1.0; 2]);
    let cfg = NeighborhoodConfig::default();
    assert!(explain_lime(&f, &[0.0; 2], &s, 0, &cfg).is_err());
    assert!(explain_lime(&f, &[0.0; 2], &s, 3, &cfg).is_err());
}
