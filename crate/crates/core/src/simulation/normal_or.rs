use rand_distr::{Distribution, Normal, StandardNormal};

use super::{
    assemble, score_replicate, stream_rng, MetricsReport, Scoring, SimDiagnostics, Truth,
    SIM_CHUNK, ZERO_FLOOR,
};
use crate::error::{Error, Result};
use crate::estimators::MLBounds;
use crate::exec::{self, Execution};
use crate::mixture::{lfdr_unchecked, MixtureParams};
use crate::stats::StatVector;

const BLOCK_Z: u64 = 0;
const BLOCK_OR: u64 = 1;

/// Per-item odds ratio `OR_i ~ N(mean, sd^2)`, redrawn until positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomOr {
    pub mean: f64,
    /// Standard deviation (not variance) of the odds ratio.
    pub sd: f64,
}

impl Default for RandomOr {
    fn default() -> Self {
        RandomOr { mean: 1.5, sd: 0.1 }
    }
}

/// Normal log-OR simulation: `z_i ~ N(ln OR, sigma2)` for the first
/// `n_assoc` items, `z_i ~ N(0, sigma2)` for the rest, `x_i = z_i^2 / sigma2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig1 {
    pub n_total: usize,
    pub n_assoc: usize,
    pub or_value: f64,
    pub sigma2: f64,
    pub replicates: usize,
    pub seed: u64,
    pub random_or: Option<RandomOr>,
    pub lfdr_threshold: f64,
    /// Also fit by maximum likelihood with these bounds.
    pub ml: Option<MLBounds>,
    /// Also run Benjamini-Hochberg at this level.
    pub bh_alpha: Option<f64>,
}

impl Default for SimConfig1 {
    fn default() -> Self {
        SimConfig1 {
            n_total: 1_000_000,
            n_assoc: 100_000,
            or_value: 1.5,
            sigma2: 0.01,
            replicates: 100,
            seed: 1,
            random_or: None,
            lfdr_threshold: 0.05,
            ml: None,
            bh_alpha: Some(0.05),
        }
    }
}

impl SimConfig1 {
    /// Sets `n_assoc = round((1 - pi0) * n_total)`.
    pub fn with_pi0(mut self, pi0: f64) -> Self {
        self.n_assoc = ((1.0 - pi0) * self.n_total as f64).round() as usize;
        self
    }

    /// Implied `pi0 = 1 - n_assoc / n_total`.
    pub fn pi0(&self) -> f64 {
        1.0 - self.n_assoc as f64 / self.n_total as f64
    }

    /// Implied `lambda = (ln OR / sigma)^2`; with a random OR, the value at its mean.
    pub fn lambda(&self) -> f64 {
        let or = self.random_or.map_or(self.or_value, |r| r.mean);
        or.ln().powi(2) / self.sigma2
    }

    pub(crate) fn scoring(&self) -> Scoring {
        Scoring {
            lfdr_threshold: self.lfdr_threshold,
            ml: self.ml,
            bh_alpha: self.bh_alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_total == 0 {
            return Err(Error::config("n_total must be positive"));
        }
        if self.n_assoc > self.n_total {
            return Err(Error::config(format!(
                "n_assoc ({}) exceeds n_total ({})",
                self.n_assoc, self.n_total
            )));
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates must be positive"));
        }
        if !(self.or_value > 0.0 && self.or_value.is_finite()) {
            return Err(Error::config(format!(
                "odds ratio must be > 0, got {}",
                self.or_value
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::config(format!(
                "sigma2 must be > 0, got {}",
                self.sigma2
            )));
        }
        if let Some(r) = self.random_or {
            if !(r.mean > 0.0 && r.mean.is_finite()) {
                return Err(Error::config(format!(
                    "random OR mean must be > 0, got {}",
                    r.mean
                )));
            }
            if !(r.sd >= 0.0 && r.sd.is_finite()) {
                return Err(Error::config(format!(
                    "random OR sd must be >= 0, got {}",
                    r.sd
                )));
            }
        }
        self.scoring().validate()
    }
}

struct Sample {
    stats: StatVector,
    /// Per-item non-centrality, only for the random-OR variant.
    lambdas: Option<Vec<f64>>,
    diagnostics: SimDiagnostics,
}

fn draw_chunk(
    cfg: &SimConfig1,
    replicate: usize,
    chunk: usize,
) -> (Vec<f64>, Vec<f64>, SimDiagnostics) {
    let sigma = cfg.sigma2.sqrt();
    let start = chunk * SIM_CHUNK;
    let end = (start + SIM_CHUNK).min(cfg.n_total);
    let mut z_rng = stream_rng(cfg.seed, replicate, BLOCK_Z, chunk);
    let mut or_rng = stream_rng(cfg.seed, replicate, BLOCK_OR, chunk);
    let or_dist = cfg
        .random_or
        .map(|r| Normal::new(r.mean, r.sd).expect("validated random OR"));
    let fixed_shift = cfg.or_value.ln() / sigma;
    let mut diag = SimDiagnostics::default();
    let mut xs = Vec::with_capacity(end - start);
    let mut shifts = Vec::new();
    for i in start..end {
        let z: f64 = StandardNormal.sample(&mut z_rng);
        let shift = if i >= cfg.n_assoc {
            0.0
        } else if let Some(d) = &or_dist {
            let mut or = d.sample(&mut or_rng);
            while or <= 0.0 {
                diag.redrawn_odds_ratios += 1;
                or = d.sample(&mut or_rng);
            }
            let s = or.ln() / sigma;
            shifts.push(s);
            s
        } else {
            fixed_shift
        };
        let y = shift + z;
        let mut x = y * y;
        if x == 0.0 {
            diag.floored += 1;
            x = ZERO_FLOOR;
        }
        xs.push(x);
    }
    (xs, shifts, diag)
}

fn draw_replicate(cfg: &SimConfig1, replicate: usize, exec: Execution) -> Result<Sample> {
    let chunks = cfg.n_total.div_ceil(SIM_CHUNK);
    let parts = exec::map_indices(exec, chunks, |c| draw_chunk(cfg, replicate, c));
    let mut stats = Vec::with_capacity(cfg.n_total);
    let mut shifts = Vec::new();
    let mut diagnostics = SimDiagnostics::default();
    for (xs, sh, d) in parts {
        stats.extend(xs);
        shifts.extend(sh);
        diagnostics.absorb(&d);
    }
    let lambdas = cfg.random_or.map(|_| {
        let nominal = cfg.lambda();
        let mut l: Vec<f64> = shifts.iter().map(|s| s * s).collect();
        l.resize(cfg.n_total, nominal);
        l
    });
    Ok(Sample {
        stats: StatVector::new(stats)?,
        lambdas,
        diagnostics,
    })
}

fn true_psi(cfg: &SimConfig1, sample: &Sample, exec: Execution) -> Vec<f64> {
    let pi0 = cfg.pi0();
    let x = sample.stats.stats();
    match &sample.lambdas {
        None => {
            let p = MixtureParams::new(pi0, cfg.lambda()).expect("validated config");
            exec::map_slice(exec, x, |&v| lfdr_unchecked(v, &p))
        }
        Some(l) => exec::map_indices(exec, x.len(), |i| {
            let p = MixtureParams::new(pi0, l[i]).expect("finite lambda");
            lfdr_unchecked(x[i], &p)
        }),
    }
}

fn run(cfg: &SimConfig1, exec: Execution) -> Result<Vec<MetricsReport>> {
    cfg.validate()?;
    let scoring = cfg.scoring();
    let lambda_true = if cfg.random_or.is_some() {
        None
    } else {
        Some(cfg.lambda())
    };
    let mut per_replicate = Vec::with_capacity(cfg.replicates);
    for j in 0..cfg.replicates {
        let sample = draw_replicate(cfg, j, exec)?;
        let psi = true_psi(cfg, &sample, exec);
        let truth = Truth {
            pi0: cfg.pi0(),
            lambda: lambda_true,
            n_assoc: cfg.n_assoc,
            psi: Some(&psi),
        };
        let outcomes = score_replicate(&sample.stats, &truth, &scoring, exec)?;
        log::debug!("sim1 replicate {j} done");
        per_replicate.push((outcomes, sample.diagnostics));
    }
    Ok(assemble(
        &scoring.labels(),
        per_replicate,
        cfg.pi0(),
        lambda_true,
        cfg.lfdr_threshold,
    ))
}

/// Runs the fixed-OR protocol. Reports come back in the order MM, ML, BH,
/// skipping methods that are not configured.
pub fn run_sim1(config: &SimConfig1, exec: Execution) -> Result<Vec<MetricsReport>> {
    if config.random_or.is_some() {
        return Err(Error::config("random_or is set; use run_sim1_random_or"));
    }
    run(config, exec)
}

/// Runs the random-OR robustness variant. No `lambda` errors are scored.
///
/// True LFDRs use each associated item's own `lambda_i = (ln OR_i / sigma)^2`
/// and, for null items, the `lambda` implied by the mean OR.
pub fn run_sim1_random_or(config: &SimConfig1, exec: Execution) -> Result<Vec<MetricsReport>> {
    if config.random_or.is_none() {
        return Err(Error::config("random_or is not set"));
    }
    run(config, exec)
}

/// Draws the statistics of one replicate, for inspection and benchmarks.
pub fn sample_sim1(config: &SimConfig1, replicate: usize, exec: Execution) -> Result<StatVector> {
    config.validate()?;
    Ok(draw_replicate(config, replicate, exec)?.stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::MethodLabel;

    fn small() -> SimConfig1 {
        SimConfig1 {
            n_total: 20_000,
            replicates: 2,
            seed: 11,
            ..Default::default()
        }
        .with_pi0(0.9)
    }

    #[test]
    fn implied_parameters() {
        let c = small();
        assert_eq!(c.n_assoc, 2000);
        assert!((c.pi0() - 0.9).abs() < 1e-15);
        assert!((c.lambda() - 16.440_195).abs() < 1e-5);
    }

    #[test]
    fn associated_block_mean() {
        let c = small();
        let s = sample_sim1(&c, 0, Execution::Sequential).unwrap();
        let a = &s.stats()[..c.n_assoc];
        let m = a.iter().sum::<f64>() / a.len() as f64;
        let sd = (2.0 + 4.0 * c.lambda()).sqrt() / (a.len() as f64).sqrt();
        assert!((m - 1.0 - c.lambda()).abs() < 4.0 * sd);
    }

    #[test]
    fn reports_in_method_order() {
        let r = run_sim1(&small(), Execution::default()).unwrap();
        let labels: Vec<_> = r.iter().map(|m| m.method).collect();
        assert_eq!(labels, vec![MethodLabel::Mm, MethodLabel::Bh]);
        assert_eq!(r[0].replicates.len(), 2);
        assert!(r[1].mse_pi0().is_none());
    }

    #[test]
    fn sequential_equals_parallel() {
        let c = SimConfig1 {
            n_total: 3 * SIM_CHUNK + 17,
            ..small()
        }
        .with_pi0(0.8);
        let a = run_sim1(&c, Execution::Sequential).unwrap();
        let b = run_sim1(&c, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn variant_selection_is_checked() {
        let mut c = small();
        assert!(run_sim1_random_or(&c, Execution::Sequential).is_err());
        c.random_or = Some(RandomOr::default());
        assert!(run_sim1(&c, Execution::Sequential).is_err());
        let r = run_sim1_random_or(&c, Execution::Sequential).unwrap();
        assert!(r[0].mse_lambda().is_none());
        assert!(r[0].mse_psi().is_some());
    }

    #[test]
    fn invalid_configs() {
        let mut c = small();
        c.n_assoc = c.n_total + 1;
        assert!(c.validate().is_err());
        let c = SimConfig1 {
            sigma2: 0.0,
            ..small()
        };
        assert!(c.validate().is_err());
        let c = SimConfig1 {
            replicates: 0,
            ..small()
        };
        assert!(c.validate().is_err());
        let c = SimConfig1 {
            lfdr_threshold: 1.0,
            ..small()
        };
        assert!(c.validate().is_err());
    }
}
