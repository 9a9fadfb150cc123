//! Local false discovery rate (LFDR) estimation for large families of
//! chi-square(1) association statistics.
//!
//! The model is a two-component mixture
//! `f(x) = pi0 * f_0(x) + (1 - pi0) * f_lambda(x)` where `f_0` is the central
//! chi-square(1) density and `f_lambda` the noncentral one. The crate provides:
//!
//! * [`distributions`]: the special functions the model needs,
//! * [`mixture`]: the LFDR `psi(x)`, the rejection cutoff `h_u` and the Bayes
//!   decision rule,
//! * [`estimators`]: closed-form method-of-moments fitting, a grid + refinement
//!   maximum-likelihood comparator and the Benjamini-Hochberg baseline,
//! * [`simulation`]: the normal log-OR and case-control genotype simulation
//!   harnesses with MSE and precision metrics,
//! * [`ingest`]: summary-statistic readers, statistic conversions and report IO.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to sequential iteration otherwise. Results are
//! bitwise identical either way; see [`exec`].

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod ingest;
pub mod mixture;
pub mod simulation;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
pub use estimators::{
    bh_stepup, fit_ml, fit_mm, moments, stats_to_pvalues, BhResult, FitDiagnostics, FitResult,
    LambdaStatus, MLBounds, Method, MomentSummary, Pi0Clamp,
};
pub use exec::Execution;
pub use mixture::{decide, lfdr, threshold_hu, Decision, DecisionConfig, MixtureParams};
pub use stats::StatVector;
