use leaf::explainers::{shapley_exact, to_lle};
use leaf::metrics::{hinge, jaccard, prescriptive_point, reiteration_similarity};
use leaf::oracles::random_explanation;
use leaf::{data, Classifier, Dataset, FnClassifier, LinearExplanation, Matrix, Method};
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..5, 2usize..12).prop_flat_map(|(f, n)| {
        (
            prop::collection::vec(prop::collection::vec(-1e6f64..1e6, f), n),
            prop::collection::vec(0u8..2, n),
        )
            .prop_map(|(rows, labels)| Dataset::from_rows(&rows, labels).unwrap())
    })
}

fn sets() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::btree_set(0usize..12, 0..6).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(d in dataset()) {
        let back = data::parse_csv(&d.to_csv_string()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn stats_ignore_row_order(d in dataset(), seed in any::<u64>()) {
        let mut idx: Vec<usize> = (0..d.n_rows()).collect();
        let mut rng = leaf::rng::rng_from_seed(seed);
        rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut rng);
        let a = data::feature_stats(&d);
        let b = data::feature_stats(&d.subset(&idx).unwrap());
        for i in 0..d.n_features() {
            let scale = 1.0 + a.mean[i].abs() + a.stddev[i];
            prop_assert!((a.mean[i] - b.mean[i]).abs() <= 1e-9 * scale);
            prop_assert!((a.stddev[i] - b.stddev[i]).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn jaccard_is_symmetric_and_bounded(a in sets(), b in sets()) {
        let s = jaccard(&a, &b);
        prop_assert_eq!(s, jaccard(&b, &a));
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(jaccard(&a, &a), 1.0);
    }

    #[test]
    fn reiteration_ignores_run_order(runs in prop::collection::vec(sets(), 2..8), rot in 0usize..8) {
        let gs: Vec<LinearExplanation> = runs
            .iter()
            .map(|s| LinearExplanation::new(Method::Lime, 0, 6, 0.0, s.iter().map(|&i| (i, 1.0)), Default::default()))
            .collect();
        let mut shifted = gs.clone();
        shifted.rotate_left(rot % gs.len());
        shifted.reverse();
        let a = reiteration_similarity(&gs).unwrap();
        let b = reiteration_similarity(&shifted).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn hinge_in_unit_interval(k in 0.0f64..1e6) {
        let h = hinge(k);
        prop_assert!((0.0..=1.0).contains(&h));
    }

    #[test]
    fn symmetric_features_share_value(a in -2.0f64..2.0, c in -2.0f64..2.0, b0 in -2.0f64..2.0, b2 in -2.0f64..2.0) {
        // Symmetric in features 0 and 1, which agree at x and in the background.
        let f = FnClassifier::new(3, |x: &[f64]| (x[0] * x[1] + 0.3 * (x[0] + x[1]) + 0.1 * x[2] * x[0] * x[1]).tanh() * 0.5 + 0.5);
        let x = [a, a, c];
        let bg = Matrix::from_rows(&[[b0, b0, b2]]).unwrap();
        let attr = shapley_exact(&f, &x, &bg).unwrap();
        prop_assert!((attr.phi[0] - attr.phi[1]).abs() < 1e-9);
        prop_assert!(attr.efficiency_gap() < 1e-9);
    }

    #[test]
    fn unread_feature_gets_nothing(x in prop::collection::vec(-3.0f64..3.0, 4), bg in prop::collection::vec(-3.0f64..3.0, 8)) {
        let f = FnClassifier::new(4, |x: &[f64]| 1.0 / (1.0 + (-(x[0] * x[3] - x[1])).exp()));
        let bg = Matrix::from_vec(2, 4, bg).unwrap();
        let attr = shapley_exact(&f, &x, &bg).unwrap();
        prop_assert!(attr.phi[2].abs() < 1e-9);
    }

    #[test]
    fn full_lle_reproduces_f(x in prop::collection::vec(-3.0f64..3.0, 5), seed in any::<u64>()) {
        let mlp = leaf::oracles::random_mlp(5, seed);
        let bg = Matrix::from_rows(&[[0.1, -0.2, 0.3, 0.7, -1.1]]).unwrap();
        let attr = shapley_exact(&mlp, &x, &bg).unwrap();
        let g = to_lle(&attr, &x, 5).unwrap();
        prop_assert!((g.evaluate(&x) - mlp.proba(&x)).abs() < 1e-9);
    }

    #[test]
    fn projection_lands_on_target(n in 2usize..8, support in 1usize..4, seed in any::<u64>(), target in 0.05f64..0.95) {
        let (g, x) = random_explanation(n, support.min(n), seed);
        let p = prescriptive_point(&g, &x, target).unwrap();
        prop_assert!((g.evaluate(&p.x_prime) - target).abs() < 1e-9);
        for i in 0..n {
            if !g.selected.contains(&i) {
                prop_assert_eq!(p.delta[i], 0.0);
            }
        }
        // The move is parallel to the weight vector.
        let (mut wd, mut ww, mut dd) = (0.0, 0.0, 0.0);
        for i in 0..n {
            wd += g.weight(i) * p.delta[i];
            ww += g.weight(i) * g.weight(i);
            dd += p.delta[i] * p.delta[i];
        }
        prop_assert!((wd * wd - ww * dd).abs() <= 1e-9 * (ww * dd).max(1e-30));
    }
}

#[test]
fn mlp_outputs_stay_in_range() {
    let mlp = leaf::oracles::random_mlp(6, 3);
    let mut rng = leaf::rng::rng_from_seed(4);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..6).map(|_| rand::Rng::random_range(&mut rng, -50.0..50.0)).collect();
        let y = mlp.proba(&x);
        assert!((0.0..=1.0).contains(&y));
    }
}
