use std::time::Instant;

use super::{
    moments_with, FitDiagnostics, FitResult, LambdaStatus, Method, MomentSummary, Pi0Clamp,
};
use crate::exec::Execution;
use crate::mixture::MixtureParams;
use crate::stats::StatVector;

/// Closed-form method-of-moments fit.
///
/// `lambda = (m2 - 3) / (m1 - 1) - 6` and `pi0 = 1 - (m1 - 1) / lambda`,
/// obtained by equating `E[X] = 1 + (1 - pi0) lambda` and
/// `E[X^2] = 3 + (1 - pi0)(lambda^2 + 6 lambda)` with the sample moments.
///
/// Degenerate data never fail: when `m1 <= 1` or the raw `lambda` is not
/// positive the fit is the no-signal verdict `pi0 = 1` with `lambda`
/// undefined, and a raw `pi0` outside [0, 1] is clamped. Both are recorded in
/// the diagnostics.
pub fn fit_mm(x: &StatVector) -> FitResult {
    fit_mm_with(x, Execution::default())
}

pub fn fit_mm_with(x: &StatVector, exec: Execution) -> FitResult {
    let start = Instant::now();
    let m = moments_with(x, exec);
    let mut fit = mm_from_moments(&m);
    fit.diagnostics.elapsed = start.elapsed();
    fit
}

/// The MM estimator applied to given moments.
pub fn mm_from_moments(m: &MomentSummary) -> FitResult {
    let excess = m.m1 - 1.0;
    let raw_lambda = (m.m2 - 3.0) / excess - 6.0;
    let raw_pi0 = 1.0 - excess / raw_lambda;

    let (params, pi0_clamp, lambda_status) = if !(excess > 0.0 && raw_lambda > 0.0) {
        (
            MixtureParams::null(),
            Pi0Clamp::High,
            LambdaStatus::Undefined,
        )
    } else if raw_pi0 < 0.0 {
        (
            MixtureParams::new(0.0, raw_lambda).expect("finite positive lambda"),
            Pi0Clamp::Low,
            LambdaStatus::Estimated,
        )
    } else if raw_pi0 > 1.0 {
        (
            MixtureParams::new(1.0, raw_lambda).expect("finite positive lambda"),
            Pi0Clamp::High,
            LambdaStatus::Estimated,
        )
    } else {
        match MixtureParams::new(raw_pi0, raw_lambda) {
            Ok(p) => (p, Pi0Clamp::None, LambdaStatus::Estimated),
            // lambda overflowed to infinity (m1 barely above 1)
            Err(_) => (
                MixtureParams::null(),
                Pi0Clamp::High,
                LambdaStatus::Undefined,
            ),
        }
    };

    FitResult {
        params,
        method: Method::Mm,
        diagnostics: FitDiagnostics {
            raw_pi0: Some(raw_pi0),
            raw_lambda: Some(raw_lambda),
            pi0_clamp,
            lambda_status,
            log_likelihood: None,
            elapsed: Default::default(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(pi0: f64, lambda: f64) -> MomentSummary {
        let w = 1.0 - pi0;
        MomentSummary {
            m1: 1.0 + w * lambda,
            m2: 3.0 + w * (lambda * lambda + 6.0 * lambda),
            n: 1,
        }
    }

    #[test]
    fn recovers_exact_moments() {
        let m = exact(0.9, 16.44);
        assert!((m.m1 - 2.644).abs() < 1e-12);
        assert!((m.m2 - 39.891_36).abs() < 1e-12);
        let f = mm_from_moments(&m);
        assert!((f.params.pi0() - 0.9).abs() < 1e-12);
        assert!((f.params.lambda().unwrap() - 16.44).abs() < 1e-12);
        assert_eq!(f.diagnostics.pi0_clamp, Pi0Clamp::None);
    }

    #[test]
    fn pure_null_moments_give_no_signal() {
        let f = mm_from_moments(&MomentSummary {
            m1: 1.0,
            m2: 3.0,
            n: 10,
        });
        assert_eq!(f.params, MixtureParams::null());
        assert_eq!(f.diagnostics.lambda_status, LambdaStatus::Undefined);
        assert_eq!(f.diagnostics.pi0_clamp, Pi0Clamp::High);
    }

    #[test]
    fn below_one_mean_gives_no_signal() {
        let f = mm_from_moments(&MomentSummary {
            m1: 0.8,
            m2: 2.0,
            n: 10,
        });
        assert_eq!(f.params, MixtureParams::null());
    }

    #[test]
    fn negative_lambda_gives_no_signal() {
        // m1 > 1 but m2 small: raw lambda = 0.5/0.5 - 6 < 0
        let f = mm_from_moments(&MomentSummary {
            m1: 1.5,
            m2: 3.5,
            n: 10,
        });
        assert!(f.diagnostics.raw_lambda.unwrap() < 0.0);
        assert_eq!(f.params, MixtureParams::null());
    }

    #[test]
    fn negative_pi0_is_clamped_low() {
        // lambda = (m2 - 3)/(m1 - 1) - 6 = 2, pi0 = 1 - 4/2 = -1
        let f = mm_from_moments(&MomentSummary {
            m1: 5.0,
            m2: 35.0,
            n: 10,
        });
        assert_eq!(f.diagnostics.pi0_clamp, Pi0Clamp::Low);
        assert_eq!(f.params.pi0(), 0.0);
        assert_eq!(f.params.lambda(), Some(2.0));
        assert_eq!(f.diagnostics.raw_pi0, Some(-1.0));
    }
}
