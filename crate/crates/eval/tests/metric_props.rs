//! Property tests and the exhaustive-matching oracle for the metric suite.

use proptest::prelude::*;
use wavex_eval::{speed_histogram, wasserstein_1d};
use wavex_core::{GridSpec, SpeedField};

/// W1 between equal-size sets equals the minimum over all assignments of the
/// mean pairwise distance. Brute force over every permutation.
fn min_cost_matching(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut idx: Vec<usize> = (0..b.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut idx, 0, &mut |perm| {
        let cost: f64 = a.iter().zip(perm).map(|(x, &k)| (x - b[k]).abs()).sum();
        if cost < best {
            best = cost;
        }
    });
    best / a.len() as f64
}

fn permute(idx: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&Vec<usize>)) {
    if k == idx.len() {
        visit(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, visit);
        idx.swap(k, i);
    }
}

#[test]
fn five_sample_sets_match_exhaustive_assignment() {
    let cases = [
        ([3.0, 50.0, 12.0, 71.0, 25.0], [14.0, 2.0, 66.0, 31.0, 49.5]),
        ([0.0, 0.0, 80.0, 80.0, 40.0], [10.0, 20.0, 30.0, 40.0, 50.0]),
        ([5.5, 5.5, 5.5, 5.5, 5.5], [5.5, 5.5, 5.5, 5.5, 7.5]),
    ];
    for (a, b) in cases {
        let w = wasserstein_1d(&a, &b).unwrap();
        let oracle = min_cost_matching(&a, &b);
        assert!((w - oracle).abs() < 1e-12, "{w} vs oracle {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn w1_metric_axioms(
        a in proptest::collection::vec(0.0f64..80.0, 1..30),
        b in proptest::collection::vec(0.0f64..80.0, 1..30),
        c in proptest::collection::vec(0.0f64..80.0, 1..30),
    ) {
        let ab = wasserstein_1d(&a, &b).unwrap();
        let ba = wasserstein_1d(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-12, "symmetry: {ab} vs {ba}");
        let ac = wasserstein_1d(&a, &c).unwrap();
        let cb = wasserstein_1d(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9, "triangle: {ab} > {ac} + {cb}");
    }

    #[test]
    fn w1_translation_equivariance(
        a in proptest::collection::vec(5.0f64..70.0, 1..30),
        b in proptest::collection::vec(5.0f64..70.0, 1..30),
        shift in -4.0f64..4.0,
    ) {
        let base = wasserstein_1d(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let b2: Vec<f64> = b.iter().map(|v| v + shift).collect();
        let moved = wasserstein_1d(&a2, &b2).unwrap();
        prop_assert!((base - moved).abs() < 1e-6, "{base} vs {moved}");
    }

    #[test]
    fn rmse_dominates_mae(values in proptest::collection::vec((0.0f64..80.0, 0.0f64..80.0), 1..40)) {
        let spec = GridSpec::new(1, values.len(), 1.0, 1.0, 0.0, 0.0, 1).unwrap();
        let pred = SpeedField::from_parts(
            spec.clone(),
            values.iter().map(|&(p, _)| p).collect(),
            vec![true; values.len()],
        ).unwrap();
        let reference = SpeedField::from_parts(
            spec,
            values.iter().map(|&(_, r)| r).collect(),
            vec![true; values.len()],
        ).unwrap();
        let rmse = wavex_eval::rmse(&[(&pred, &reference)]).unwrap();
        let mae: f64 = values.iter().map(|&(p, r)| (p - r).abs()).sum::<f64>() / values.len() as f64;
        prop_assert!(rmse + 1e-12 >= mae, "rmse {rmse} < mae {mae}");
    }

    #[test]
    fn histogram_conserves_counts(values in proptest::collection::vec(0.0f64..=80.0, 0..60)) {
        if values.is_empty() {
            let spec = GridSpec::new(1, 1, 1.0, 1.0, 0.0, 0.0, 1).unwrap();
            let f = SpeedField::masked(spec).unwrap();
            let h = speed_histogram(&[&f], 0.0, 80.0, 1.0).unwrap();
            prop_assert_eq!(h.total(), 0);
        } else {
            let spec = GridSpec::new(1, values.len(), 1.0, 1.0, 0.0, 0.0, 1).unwrap();
            let f = SpeedField::from_parts(spec, values.clone(), vec![true; values.len()]).unwrap();
            let h = speed_histogram(&[&f], 0.0, 80.0, 1.0).unwrap();
            prop_assert_eq!(h.total(), values.len() as u64);
        }
    }
}
