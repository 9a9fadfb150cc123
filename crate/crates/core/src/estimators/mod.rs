//! Fitting `(pi0, lambda)` from observed statistics, and the
//! Benjamini-Hochberg baseline.

use std::fmt;
use std::time::Duration;

use crate::error::Result;
use crate::exec::{self, Execution};
use crate::mixture::MixtureParams;

mod bh;
mod ml;
mod mm;

pub use bh::{bh_stepup, stats_to_pvalues, stats_to_pvalues_with, BhResult};
pub use ml::{fit_ml, fit_ml_with, grid_scan, log_likelihood, GridPoint, MLBounds};
pub use mm::{fit_mm, fit_mm_with, mm_from_moments};

pub use crate::stats::StatVector;

/// First and second sample moments of the statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    /// Mean of `x_i`.
    pub m1: f64,
    /// Mean of `x_i^2`.
    pub m2: f64,
    pub n: usize,
}

/// Sample moments in one pass.
///
/// Sums are exact up to a final rounding, so the result depends only on the
/// multiset of statistics, not on their order or on the thread count.
pub fn moments(x: &StatVector) -> MomentSummary {
    moments_with(x, Execution::default())
}

pub fn moments_with(x: &StatVector, exec: Execution) -> MomentSummary {
    let n = x.len();
    let (s1, s2) = exec::sum2_by(exec, x.stats(), |&v| (v, v * v));
    MomentSummary {
        m1: s1 / n as f64,
        m2: s2 / n as f64,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Method of moments.
    Mm,
    /// Maximum likelihood.
    Ml,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mm => "MM",
            Method::Ml => "ML",
        })
    }
}

/// Clamp applied to a raw `pi0` estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pi0Clamp {
    None,
    /// Raw estimate was below 0.
    Low,
    /// Raw estimate was above 1, or the data carried no signal at all.
    High,
}

impl fmt::Display for Pi0Clamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pi0Clamp::None => "none",
            Pi0Clamp::Low => "low",
            Pi0Clamp::High => "high",
        })
    }
}

/// What is known about the reported `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LambdaStatus {
    Estimated,
    /// No-signal verdict: `pi0 = 1` and `lambda` is undefined.
    Undefined,
    /// Likelihood is flat in `lambda` at `pi0 = 1`; reported at the lower bound.
    FlatAtLowerBound,
}

impl fmt::Display for LambdaStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LambdaStatus::Estimated => "estimated",
            LambdaStatus::Undefined => "undefined",
            LambdaStatus::FlatAtLowerBound => "flat",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    /// `pi0` before clamping (MM only; NaN when the formula is undefined).
    pub raw_pi0: Option<f64>,
    /// `lambda` before clamping (MM only).
    pub raw_lambda: Option<f64>,
    pub pi0_clamp: Pi0Clamp,
    pub lambda_status: LambdaStatus,
    /// Log-likelihood at the estimate (ML only).
    pub log_likelihood: Option<f64>,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: MixtureParams,
    pub method: Method,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    /// True when the two fits agree on everything except wall time.
    pub fn same_estimate(&self, other: &FitResult) -> bool {
        let strip = |f: &FitResult| {
            let mut f = f.clone();
            f.diagnostics.elapsed = Duration::ZERO;
            f
        };
        let (a, b) = (strip(self), strip(other));
        a.method == b.method
            && a.params.pi0().to_bits() == b.params.pi0().to_bits()
            && a.params.lambda().map(f64::to_bits) == b.params.lambda().map(f64::to_bits)
            && a.diagnostics.pi0_clamp == b.diagnostics.pi0_clamp
            && a.diagnostics.lambda_status == b.diagnostics.lambda_status
            && a.diagnostics.raw_pi0.map(f64::to_bits) == b.diagnostics.raw_pi0.map(f64::to_bits)
            && a.diagnostics.raw_lambda.map(f64::to_bits)
                == b.diagnostics.raw_lambda.map(f64::to_bits)
            && a.diagnostics.log_likelihood.map(f64::to_bits)
                == b.diagnostics.log_likelihood.map(f64::to_bits)
    }
}

/// Fits with the requested method.
pub fn fit(
    x: &StatVector,
    method: Method,
    bounds: &MLBounds,
    exec: Execution,
) -> Result<FitResult> {
    match method {
        Method::Mm => Ok(fit_mm_with(x, exec)),
        Method::Ml => fit_ml_with(x, bounds, exec),
    }
}
