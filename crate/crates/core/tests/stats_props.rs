use proptest::prelude::*;
use regclass_core::stats::{
    cohens_d, midranks, scott_knott_esd, spearman, wilcoxon_exact_p, wilcoxon_normal_p, Magnitude, SkEsdOptions,
};

/// Enumerate all 2^n sign assignments of the (mid)ranks and count those at
/// least as extreme as the observed statistic.
fn enumerated_p(diffs: &[f64]) -> f64 {
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let total: f64 = ranks.iter().sum();
    let w: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let dev = (w - total / 2.0).abs();
    let n = diffs.len();
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if (s - total / 2.0).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    (extreme as f64 / (1u64 << n) as f64).min(1.0)
}

fn diffs(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((1i32..6, any::<bool>()), 1..=max_n)
        .prop_map(|v| v.into_iter().map(|(m, s)| if s { m as f64 } else { -(m as f64) }).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn exact_wilcoxon_matches_enumeration(d in diffs(12)) {
        let p = wilcoxon_exact_p(&d).unwrap();
        prop_assert!((p - enumerated_p(&d)).abs() < 1e-12, "{} vs {}", p, enumerated_p(&d));
    }

    #[test]
    fn normal_approximation_tracks_exact(d in prop::collection::vec(-1.0f64..1.0, 10..=12)) {
        let e = wilcoxon_exact_p(&d).unwrap();
        let a = wilcoxon_normal_p(&d).unwrap();
        prop_assert!((e - a).abs() < 0.02, "exact {} approx {}", e, a);
    }

    #[test]
    fn cohens_d_is_antisymmetric_and_affine_invariant(
        a in prop::collection::vec(-10.0f64..10.0, 3..30),
        b in prop::collection::vec(-10.0f64..10.0, 3..30),
        shift in -100.0f64..100.0,
        scale in 0.1f64..10.0,
    ) {
        let d = cohens_d(&a, &b).unwrap().d;
        prop_assume!(d.is_finite());
        prop_assert!((d + cohens_d(&b, &a).unwrap().d).abs() < 1e-9);
        let t = |x: &[f64]| x.iter().map(|v| v * scale + shift).collect::<Vec<_>>();
        prop_assert!((cohens_d(&t(&a), &t(&b)).unwrap().d - d).abs() < 1e-6 * (1.0 + d.abs()));
    }

    #[test]
    fn spearman_is_bounded_and_rank_invariant(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(r) = spearman(&x, &y) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            let cubed: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
            prop_assert!((spearman(&cubed, &y).unwrap() - r).abs() < 1e-12);
            prop_assert!((spearman(&y, &x).unwrap() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn midranks_sum_is_triangular(v in prop::collection::vec(0u8..5, 1..40)) {
        let x: Vec<f64> = v.iter().map(|&b| b as f64).collect();
        let n = x.len() as f64;
        prop_assert!((midranks(&x).iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn sk_esd_ranks_are_contiguous_and_ordered(
        groups in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 5..20), 1..6),
        offsets in prop::collection::vec(0.0f64..3.0, 6),
    ) {
        let dists: Vec<(String, Vec<f64>)> = groups
            .iter()
            .enumerate()
            .map(|(i, g)| (format!("t{i}"), g.iter().map(|v| v + offsets[i]).collect()))
            .collect();
        let t = scott_knott_esd(&dists, SkEsdOptions::default()).unwrap();
        prop_assert_eq!(t.treatments.len(), dists.len());
        let mut ranks = t.assigned_rank.clone();
        ranks.dedup();
        prop_assert_eq!(ranks, (1..=t.n_ranks()).collect::<Vec<_>>());
        prop_assert!(t.mean_metric.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn six_positive_differences_give_minimum_exact_p() {
    let p = wilcoxon_exact_p(&[0.1, 0.4, 0.2, 0.9, 0.3, 0.5]).unwrap();
    assert!((p - 0.03125).abs() < 1e-15);
}

#[test]
fn magnitude_boundaries_are_inclusive() {
    for (d, m) in [
        (0.2, Magnitude::Negligible),
        (0.2000001, Magnitude::Small),
        (0.5, Magnitude::Small),
        (-0.5, Magnitude::Small),
        (0.8, Magnitude::Medium),
        (0.81, Magnitude::Large),
        (-3.0, Magnitude::Large),
    ] {
        assert_eq!(Magnitude::from_d(d), m, "{d}");
    }
}
