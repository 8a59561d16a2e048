mod common;

use proptest::prelude::*;
use silif_core::dataset::sign_log;
use silif_core::metrics::{auc_pr, auc_roc, paired_t_test, precision_at_k};
use silif_core::silif::{combine, contribution};
use silif_core::ScoreVector;

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (3usize..120).prop_flat_map(|n| {
        (
            prop::collection::vec(-50.0f64..50.0, n),
            prop::collection::vec(0u8..2, n).prop_map(|mut y| {
                y[0] = 1;
                y[1] = 0;
                y
            }),
        )
    })
}

proptest! {
    #[test]
    fn sign_log_is_odd(x in -1e12f64..1e12) {
        prop_assert_eq!(sign_log(-x).unwrap(), -sign_log(x).unwrap());
    }

    #[test]
    fn sign_log_is_monotone(a in -1e9f64..1e9, b in -1e9f64..1e9) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(sign_log(lo).unwrap() <= sign_log(hi).unwrap());
    }

    #[test]
    fn ranking_metrics_ignore_monotone_transforms((s, y) in scored_labels()) {
        let t: Vec<f64> = s.iter().map(|v| (v / 10.0).exp() * 3.0 + 1.0).collect();
        prop_assert!((auc_roc(&s, &y).unwrap() - auc_roc(&t, &y).unwrap()).abs() < 1e-12);
        prop_assert!((auc_pr(&s, &y).unwrap() - auc_pr(&t, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn metrics_match_oracles((s, y) in scored_labels()) {
        prop_assert!((auc_roc(&s, &y).unwrap() - common::pairwise_auc(&s, &y)).abs() < 1e-12);
        prop_assert!((auc_pr(&s, &y).unwrap() - common::sweep_average_precision(&s, &y)).abs() < 1e-12);
    }

    #[test]
    fn precision_at_k_is_a_fraction((s, y) in scored_labels(), frac in 0.01f64..1.0) {
        let k = ((s.len() as f64 * frac).ceil() as usize).clamp(1, s.len());
        let p = precision_at_k(&s, &y, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p * k as f64 - (p * k as f64).round()).abs() < 1e-9);
    }

    #[test]
    fn contribution_is_bounded(a in 0.0f64..1e6, b in 0.0f64..1e6) {
        let c = contribution(a, b);
        prop_assert!((0.0..=2.0).contains(&c));
    }

    #[test]
    fn combine_is_affine_in_alpha(
        pair in (3usize..60).prop_flat_map(|n| (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(0.0f64..2.0, n),
        )),
        a1 in 0.0f64..10.0,
        a2 in 0.0f64..10.0,
    ) {
        let s_if = ScoreVector::new("iforest", pair.0);
        let s_sil = ScoreVector::new("silhouette", pair.1);
        let c0 = combine(&s_if, &s_sil, 0.0).unwrap();
        let c1 = combine(&s_if, &s_sil, a1).unwrap();
        let c2 = combine(&s_if, &s_sil, a2).unwrap();
        for i in 0..c0.len() {
            // (c(a1) - c(0)) / a1 == (c(a2) - c(0)) / a2 == z(s_sil)
            let lhs = (c1.scores[i] - c0.scores[i]) * a2;
            let rhs = (c2.scores[i] - c0.scores[i]) * a1;
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn t_test_is_antisymmetric(
        pair in (2usize..20).prop_flat_map(|n| (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n),
        )),
    ) {
        let ab = paired_t_test(&pair.0, &pair.1).unwrap();
        let ba = paired_t_test(&pair.1, &pair.0).unwrap();
        prop_assert!(ab.t == -ba.t || (ab.t.is_nan() && ba.t.is_nan()));
        prop_assert!((ab.p - ba.p).abs() < 1e-12 || (ab.p.is_nan() && ba.p.is_nan()));
        prop_assert!(ab.p.is_nan() || (0.0..=1.0).contains(&ab.p));
    }
}
