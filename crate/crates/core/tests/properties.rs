mod common;

use lfdr_core::distributions::{central_chisq1_cdf, central_chisq1_sf};
use lfdr_core::estimators::{fit_mm, mm_from_moments, moments};
use lfdr_core::{bh_stepup, decide, lfdr, threshold_hu, DecisionConfig, MixtureParams, StatVector};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (f64, f64)> {
    (0.001f64..0.999, 0.01f64..60.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lfdr_stays_in_range((pi0, lambda) in params(), x in 1e-8f64..1e4) {
        let p = MixtureParams::new(pi0, lambda).unwrap();
        let v = lfdr(x, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(v <= p.lfdr_at_zero() * (1.0 + 1e-15));
    }

    #[test]
    fn lfdr_decreases_in_x((pi0, lambda) in params(), a in 1e-6f64..50.0, b in 1e-6f64..50.0) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = MixtureParams::new(pi0, lambda).unwrap();
        prop_assert!(lfdr(hi, &p).unwrap() <= lfdr(lo, &p).unwrap());
    }

    #[test]
    fn threshold_rule_equals_lfdr_rule(
        (pi0, lambda) in params(),
        u in 0.001f64..0.999,
        xs in prop::collection::vec(1e-6f64..200.0, 1..50),
    ) {
        let p = MixtureParams::new(pi0, lambda).unwrap();
        let cfg = DecisionConfig::new(u).unwrap();
        let d = decide(&StatVector::new(xs.clone()).unwrap(), &p, &cfg);
        for (x, r) in xs.iter().zip(&d.reject) {
            prop_assert_eq!(*r, lfdr(*x, &p).unwrap() < u);
        }
    }

    #[test]
    fn threshold_is_nonnegative((pi0, lambda) in params(), u in 0.001f64..0.999) {
        let h = threshold_hu(&MixtureParams::new(pi0, lambda).unwrap(), &DecisionConfig::new(u).unwrap());
        prop_assert!(h >= 0.0);
    }

    #[test]
    fn mm_recovers_exact_moments(pi0 in 0.01f64..0.99, lambda in 0.5f64..40.0) {
        let f = mm_from_moments(&common::mixture_moments(pi0, lambda));
        prop_assert!(((f.params.pi0() - pi0) / pi0).abs() < 1e-9);
        prop_assert!(((f.params.lambda().unwrap() - lambda) / lambda).abs() < 1e-9);
    }

    #[test]
    fn mm_is_permutation_invariant(
        xs in prop::collection::vec(1e-6f64..80.0, 2..400),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut shuffled = xs.clone();
        shuffled.shuffle(&mut common::rng(seed));
        let a = fit_mm(&StatVector::new(xs).unwrap());
        let b = fit_mm(&StatVector::new(shuffled).unwrap());
        prop_assert!(a.same_estimate(&b));
    }

    #[test]
    fn mm_output_is_always_valid(xs in prop::collection::vec(1e-9f64..1e4, 1..200)) {
        let s = StatVector::new(xs).unwrap();
        let f = fit_mm(&s);
        prop_assert!((0.0..=1.0).contains(&f.params.pi0()));
        if let Some(l) = f.params.lambda() {
            prop_assert!(l > 0.0 && l.is_finite());
        } else {
            prop_assert_eq!(f.params.pi0(), 1.0);
        }
        let m = moments(&s);
        prop_assert!(m.m2 >= m.m1 * m.m1 * (1.0 - 1e-12));
    }

    #[test]
    fn bh_rejects_a_prefix_of_sorted_pvalues(
        p in prop::collection::vec(0.0f64..=1.0, 1..300),
        alpha in 0.001f64..0.5,
    ) {
        let r = bh_stepup(&p, alpha).unwrap();
        prop_assert_eq!(r.rejected.iter().filter(|&&b| b).count(), r.k);
        let max_rejected = p.iter().zip(&r.rejected).filter(|(_, &b)| b).map(|(&v, _)| v).fold(f64::NEG_INFINITY, f64::max);
        let min_kept = p.iter().zip(&r.rejected).filter(|(_, &b)| !b).map(|(&v, _)| v).fold(f64::INFINITY, f64::min);
        prop_assert!(max_rejected <= min_kept);
        if r.k > 0 {
            prop_assert!(max_rejected <= r.k as f64 / p.len() as f64 * alpha);
        }
    }

    #[test]
    fn sf_and_cdf_partition_unity(x in 1e-10f64..40.0, dx in 1e-6f64..5.0) {
        let sf = central_chisq1_sf(x).unwrap();
        prop_assert!((sf + central_chisq1_cdf(x).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!(central_chisq1_sf(x + dx).unwrap() < sf);
    }
}
