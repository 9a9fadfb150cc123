//! Monte-Carlo evaluation harnesses.
//!
//! * [`run_sim1`]: statistics `x_i = (z_i / sigma)^2` with
//!   `z_i ~ N(ln OR, sigma^2)` for the associated block and
//!   `z_i ~ N(0, sigma^2)` for the rest, optionally with a per-item random OR.
//! * [`run_sim2`]: case-control genotype tables drawn from two multinomials
//!   under an additive penetrance model, scored with the allelic chi-square
//!   test.
//!
//! Items `0..n_assoc` are always the associated ones. Random numbers come from
//! ChaCha8 streams keyed by `(replicate, block, chunk)`, so every report is a
//! pure function of the configuration and seed.

use std::io::Write;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::{bh_stepup, fit_ml_with, fit_mm_with, stats_to_pvalues_with, MLBounds};
use crate::exec::{self, Execution};
use crate::mixture::{lfdr_all, MixtureParams};
use crate::stats::StatVector;

mod genotype;
mod normal_or;

pub use genotype::{
    allelic_chisq, draw_table, genotype_model, run_sim2, sample_sim2, GenotypeModel, GenotypeTable,
    SimConfig2,
};
pub use normal_or::{run_sim1, run_sim1_random_or, sample_sim1, RandomOr, SimConfig1};

/// Items per random-number stream.
pub const SIM_CHUNK: usize = 1 << 14;

/// Floor applied to statistics that come out exactly zero.
pub const ZERO_FLOOR: f64 = 1e-12;

/// The default sweep of true null proportions:
/// 0, 0.05, 0.1, 0.2, ..., 0.9, 0.95, 1.
pub fn default_pi0_levels() -> Vec<f64> {
    let mut v = vec![0.0, 0.05];
    v.extend((1..=9).map(|i| i as f64 / 10.0));
    v.extend([0.95, 1.0]);
    v
}

pub(crate) fn stream_rng(seed: u64, replicate: usize, block: u64, chunk: usize) -> ChaCha8Rng {
    debug_assert!(replicate < 1 << 32 && block < 16 && chunk < 1 << 28);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replicate as u64) << 32) | (block << 28) | chunk as u64);
    rng
}

/// Which estimator a report row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodLabel {
    Mm,
    Ml,
    /// Benjamini-Hochberg on chi-square p-values.
    Bh,
}

impl std::fmt::Display for MethodLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MethodLabel::Mm => "MM",
            MethodLabel::Ml => "ML",
            MethodLabel::Bh => "BH",
        })
    }
}

/// Discovery precision: true discoveries over all discoveries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Precision {
    Ratio(f64),
    /// No discoveries at all (0 / 0).
    Undefined,
}

impl Precision {
    pub fn from_counts(true_discoveries: u64, discoveries: u64) -> Self {
        if discoveries == 0 {
            Precision::Undefined
        } else {
            Precision::Ratio(true_discoveries as f64 / discoveries as f64)
        }
    }

    pub fn ratio(self) -> Option<f64> {
        match self {
            Precision::Ratio(r) => Some(r),
            Precision::Undefined => None,
        }
    }
}

/// Precision at LFDR threshold `t`: among items with `lfdr_hat <= t`, the
/// fraction that are truly associated.
pub fn precision(truth: &[bool], lfdr_hat: &[f64], t: f64) -> Result<Precision> {
    if truth.len() != lfdr_hat.len() {
        return Err(Error::config(format!(
            "{} truth bits for {} LFDR values",
            truth.len(),
            lfdr_hat.len()
        )));
    }
    let (mut hits, mut total) = (0u64, 0u64);
    for (&assoc, &psi) in truth.iter().zip(lfdr_hat) {
        if psi <= t {
            total += 1;
            hits += assoc as u64;
        }
    }
    Ok(Precision::from_counts(hits, total))
}

/// One replicate's outcome for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub pi0_hat: Option<f64>,
    /// `None` when the estimator returned an undefined `lambda`.
    pub lambda_hat: Option<f64>,
    pub err_pi0: Option<f64>,
    pub err_lambda: Option<f64>,
    pub err_psi: Option<f64>,
    pub true_discoveries: u64,
    pub discoveries: u64,
}

/// Counters that do not affect estimates but explain the run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimDiagnostics {
    /// Statistics that were exactly zero and were floored.
    pub floored: u64,
    /// Genotype tables redrawn because an allele column was empty.
    pub redrawn_tables: u64,
    /// Random odds ratios redrawn because they were not positive.
    pub redrawn_odds_ratios: u64,
}

impl SimDiagnostics {
    fn absorb(&mut self, other: &SimDiagnostics) {
        self.floored += other.floored;
        self.redrawn_tables += other.redrawn_tables;
        self.redrawn_odds_ratios += other.redrawn_odds_ratios;
    }
}

/// Aggregated metrics of one method at one true `pi0`.
///
/// Every MSE is the arithmetic mean of the per-replicate squared errors kept
/// in `replicates`. An undefined `lambda` estimate (the no-signal verdict) is
/// scored as `lambda_hat = 0`, the non-centrality under which the mixture
/// degenerates to the null. Precision pools discovery counts over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: MethodLabel,
    pub pi0_true: f64,
    /// `None` when no single true `lambda` exists.
    pub lambda_true: Option<f64>,
    pub lfdr_threshold: f64,
    pub replicates: Vec<ReplicateOutcome>,
    pub diagnostics: SimDiagnostics,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl MetricsReport {
    fn collect<F: Fn(&ReplicateOutcome) -> Option<f64>>(&self, f: F) -> Option<Vec<f64>> {
        if self.replicates.is_empty() {
            return None;
        }
        self.replicates.iter().map(f).collect()
    }

    pub fn pi0_hats(&self) -> Option<Vec<f64>> {
        self.collect(|r| r.pi0_hat)
    }

    pub fn lambda_hats(&self) -> Option<Vec<f64>> {
        if self.method == MethodLabel::Bh {
            return None;
        }
        self.collect(|r| Some(r.lambda_hat.unwrap_or(0.0)))
    }

    pub fn mean_pi0_hat(&self) -> Option<f64> {
        self.pi0_hats().map(|v| mean(&v))
    }

    pub fn sd_pi0_hat(&self) -> Option<f64> {
        self.pi0_hats().map(|v| sample_sd(&v))
    }

    pub fn mean_lambda_hat(&self) -> Option<f64> {
        self.lambda_hats().map(|v| mean(&v))
    }

    pub fn sd_lambda_hat(&self) -> Option<f64> {
        self.lambda_hats().map(|v| sample_sd(&v))
    }

    pub fn mse_pi0(&self) -> Option<f64> {
        self.collect(|r| r.err_pi0).map(|v| mean(&v))
    }

    pub fn mse_lambda(&self) -> Option<f64> {
        self.collect(|r| r.err_lambda).map(|v| mean(&v))
    }

    pub fn mse_psi(&self) -> Option<f64> {
        self.collect(|r| r.err_psi).map(|v| mean(&v))
    }

    /// Pooled `(true discoveries, discoveries)` over replicates.
    pub fn discovery_counts(&self) -> (u64, u64) {
        self.replicates.iter().fold((0, 0), |(t, d), r| {
            (t + r.true_discoveries, d + r.discoveries)
        })
    }

    pub fn precision(&self) -> Precision {
        let (t, d) = self.discovery_counts();
        Precision::from_counts(t, d)
    }

    /// Mean over replicates of the false discovery proportion
    /// `V / max(R, 1)`.
    pub fn empirical_fdr(&self) -> f64 {
        let fdp: Vec<f64> = self
            .replicates
            .iter()
            .map(|r| (r.discoveries - r.true_discoveries) as f64 / r.discoveries.max(1) as f64)
            .collect();
        mean(&fdp)
    }
}

/// Column header of the metrics CSV.
pub const METRICS_CSV_HEADER: &str = "method,pi0_true,mean_pi0_hat,sd_pi0_hat,mean_lambda_hat,\
sd_lambda_hat,mse_pi0,mse_lambda,mse_psi,precision,true_discoveries,discoveries";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if !x.is_nan() => format!("{x}"),
        _ => "NA".to_string(),
    }
}

/// Writes one CSV row per report. Missing or undefined values are `NA`.
pub fn write_metrics_csv<W: Write>(mut w: W, reports: &[MetricsReport]) -> std::io::Result<()> {
    writeln!(w, "{METRICS_CSV_HEADER}")?;
    for r in reports {
        let (t, d) = r.discovery_counts();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.pi0_true,
            fmt_opt(r.mean_pi0_hat()),
            fmt_opt(r.sd_pi0_hat()),
            fmt_opt(r.mean_lambda_hat()),
            fmt_opt(r.sd_lambda_hat()),
            fmt_opt(r.mse_pi0()),
            fmt_opt(r.mse_lambda()),
            fmt_opt(r.mse_psi()),
            fmt_opt(r.precision().ratio()),
            t,
            d
        )?;
    }
    Ok(())
}

/// Estimators applied to every simulated replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scoring {
    pub lfdr_threshold: f64,
    pub ml: Option<MLBounds>,
    pub bh_alpha: Option<f64>,
}

impl Scoring {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.lfdr_threshold > 0.0 && self.lfdr_threshold < 1.0) {
            return Err(Error::config(format!(
                "LFDR threshold must lie in (0, 1), got {}",
                self.lfdr_threshold
            )));
        }
        if let Some(a) = self.bh_alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::config(format!(
                    "BH alpha must lie in (0, 1), got {a}"
                )));
            }
        }
        if let Some(b) = &self.ml {
            b.validate()?;
        }
        Ok(())
    }

    pub(crate) fn labels(&self) -> Vec<MethodLabel> {
        let mut v = vec![MethodLabel::Mm];
        if self.ml.is_some() {
            v.push(MethodLabel::Ml);
        }
        if self.bh_alpha.is_some() {
            v.push(MethodLabel::Bh);
        }
        v
    }
}

/// What is known about the truth of one replicate.
pub(crate) struct Truth<'a> {
    pub pi0: f64,
    pub lambda: Option<f64>,
    pub n_assoc: usize,
    /// True LFDR per item, when it is known.
    pub psi: Option<&'a [f64]>,
}

/// Fits and scores every configured method on one replicate.
pub(crate) fn score_replicate(
    stats: &StatVector,
    truth: &Truth<'_>,
    scoring: &Scoring,
    exec: Execution,
) -> Result<Vec<ReplicateOutcome>> {
    let n = stats.len();
    let mut out = Vec::with_capacity(3);
    let mut fits = vec![fit_mm_with(stats, exec)];
    if let Some(b) = &scoring.ml {
        fits.push(fit_ml_with(stats, b, exec)?);
    }
    for fit in &fits {
        let params: MixtureParams = fit.params;
        let psi_hat = lfdr_all(stats, &params, exec);
        let err_psi = truth.psi.map(|psi| {
            exec::sum_indexed(exec, n, |i| {
                let d = psi_hat[i] - psi[i];
                d * d
            }) / n as f64
        });
        let (hits, total) =
            count_discoveries(&psi_hat, truth.n_assoc, |v| v <= scoring.lfdr_threshold);
        let lambda_hat = params.lambda();
        out.push(ReplicateOutcome {
            pi0_hat: Some(params.pi0()),
            lambda_hat,
            err_pi0: Some((params.pi0() - truth.pi0).powi(2)),
            err_lambda: truth
                .lambda
                .map(|l| (lambda_hat.unwrap_or(0.0) - l).powi(2)),
            err_psi,
            true_discoveries: hits,
            discoveries: total,
        });
    }
    if let Some(alpha) = scoring.bh_alpha {
        let p = stats_to_pvalues_with(stats, exec);
        let bh = bh_stepup(&p, alpha)?;
        let rejected: Vec<f64> = bh
            .rejected
            .iter()
            .map(|&r| if r { 0.0 } else { 1.0 })
            .collect();
        let (hits, total) = count_discoveries(&rejected, truth.n_assoc, |v| v == 0.0);
        out.push(ReplicateOutcome {
            pi0_hat: None,
            lambda_hat: None,
            err_pi0: None,
            err_lambda: None,
            err_psi: None,
            true_discoveries: hits,
            discoveries: total,
        });
    }
    Ok(out)
}

fn count_discoveries<F: Fn(f64) -> bool>(values: &[f64], n_assoc: usize, hit: F) -> (u64, u64) {
    let mut hits = 0u64;
    let mut total = 0u64;
    for (i, &v) in values.iter().enumerate() {
        if hit(v) {
            total += 1;
            if i < n_assoc {
                hits += 1;
            }
        }
    }
    (hits, total)
}

/// Transposes per-replicate outcomes into one report per method.
pub(crate) fn assemble(
    labels: &[MethodLabel],
    per_replicate: Vec<(Vec<ReplicateOutcome>, SimDiagnostics)>,
    pi0_true: f64,
    lambda_true: Option<f64>,
    lfdr_threshold: f64,
) -> Vec<MetricsReport> {
    let mut diagnostics = SimDiagnostics::default();
    let mut reports: Vec<MetricsReport> = labels
        .iter()
        .map(|&method| MetricsReport {
            method,
            pi0_true,
            lambda_true,
            lfdr_threshold,
            replicates: Vec::with_capacity(per_replicate.len()),
            diagnostics: SimDiagnostics::default(),
        })
        .collect();
    for (outcomes, diag) in per_replicate {
        diagnostics.absorb(&diag);
        for (report, o) in reports.iter_mut().zip(outcomes) {
            report.replicates.push(o);
        }
    }
    for r in &mut reports {
        r.diagnostics = diagnostics.clone();
    }
    reports
}
