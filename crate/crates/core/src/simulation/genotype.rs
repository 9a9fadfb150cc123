use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{
    assemble, score_replicate, stream_rng, MetricsReport, Scoring, SimDiagnostics, Truth,
    SIM_CHUNK, ZERO_FLOOR,
};
use crate::error::{Error, Result};
use crate::estimators::MLBounds;
use crate::exec::{self, Execution};
use crate::stats::StatVector;

const BLOCK_TABLES: u64 = 2;

/// Genotype probabilities of an additive penetrance model under
/// Hardy-Weinberg equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenotypeModel {
    /// Population genotype frequencies `g_j` for AA, AB, BB.
    pub g: [f64; 3],
    /// Penetrances `v_j = P(case | G_j)`.
    pub v: [f64; 3],
    /// Prevalence `k = sum v_j g_j`.
    pub k: f64,
    /// `p_j = P(G_j | case) = g_j v_j / k`.
    pub case: [f64; 3],
    /// `q_j = P(G_j | control) = g_j (1 - v_j) / (1 - k)`.
    pub control: [f64; 3],
}

/// Builds the additive model from risk-allele frequency `p`, reference
/// penetrance `v0` and genotypic odds ratio `or2` of BB against AA.
pub fn genotype_model(p: f64, v0: f64, or2: f64) -> Result<GenotypeModel> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::config(format!(
            "allele frequency must lie in (0, 1), got {p}"
        )));
    }
    if !(v0 > 0.0 && v0 < 1.0) {
        return Err(Error::config(format!(
            "penetrance v0 must lie in (0, 1), got {v0}"
        )));
    }
    if !(or2 > 0.0 && or2.is_finite()) {
        return Err(Error::config(format!("OR2 must be > 0, got {or2}")));
    }
    let g = [(1.0 - p) * (1.0 - p), 2.0 * p * (1.0 - p), p * p];
    let b0 = (v0 / (1.0 - v0)).ln();
    let b2 = or2.ln();
    let v2 = 1.0 / (1.0 + (-(b0 + b2)).exp());
    let v1 = 0.5 * (v0 + v2);
    let v = [v0, v1, v2];
    if !v.iter().all(|&x| x > 0.0 && x < 1.0) {
        return Err(Error::config(format!("penetrances {v:?} leave (0, 1)")));
    }
    let k = g[0] * v[0] + g[1] * v[1] + g[2] * v[2];
    let case = [0, 1, 2].map(|j| g[j] * v[j] / k);
    let control = [0, 1, 2].map(|j| g[j] * (1.0 - v[j]) / (1.0 - k));
    Ok(GenotypeModel {
        g,
        v,
        k,
        case,
        control,
    })
}

/// Case and control genotype counts for one marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenotypeTable {
    pub cases: [u64; 3],
    pub controls: [u64; 3],
}

impl GenotypeTable {
    /// Allelic 1-df chi-square statistic of the collapsed 2x2 allele table.
    ///
    /// `None` when an allele is absent from both groups, which leaves an
    /// expected count of zero.
    pub fn allelic_chisq(&self) -> Option<f64> {
        allelic_chisq(self)
    }
}

/// Allelic chi-square `sum (o - e)^2 / e` over the four allele cells.
pub fn allelic_chisq(t: &GenotypeTable) -> Option<f64> {
    let [r0, r1, r2] = t.cases.map(|c| c as f64);
    let [s0, s1, s2] = t.controls.map(|c| c as f64);
    let big_r = r0 + r1 + r2;
    let big_s = s0 + s1 + s2;
    let a = 2.0 * (r0 + s0) + (r1 + s1);
    let b = (r1 + s1) + 2.0 * (r2 + s2);
    let total = 2.0 * (big_r + big_s);
    if a == 0.0 || b == 0.0 || big_r == 0.0 || big_s == 0.0 {
        return None;
    }
    let observed = [2.0 * r0 + r1, r1 + 2.0 * r2, 2.0 * s0 + s1, s1 + 2.0 * s2];
    let expected = [
        2.0 * big_r * a / total,
        2.0 * big_r * b / total,
        2.0 * big_s * a / total,
        2.0 * big_s * b / total,
    ];
    Some(
        observed
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e) * (o - e) / e)
            .sum(),
    )
}

fn multinomial3<R: Rng + ?Sized>(rng: &mut R, n: u64, probs: &[f64; 3]) -> [u64; 3] {
    let c0 = Binomial::new(n, probs[0].clamp(0.0, 1.0))
        .expect("probability in [0, 1]")
        .sample(rng);
    let rest = 1.0 - probs[0];
    let p1 = if rest > 0.0 {
        (probs[1] / rest).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let c1 = Binomial::new(n - c0, p1)
        .expect("probability in [0, 1]")
        .sample(rng);
    [c0, c1, n - c0 - c1]
}

/// Draws one table: `r` cases from `case` and `s` controls from `control`.
pub fn draw_table<R: Rng + ?Sized>(
    rng: &mut R,
    case: &[f64; 3],
    control: &[f64; 3],
    r: u64,
    s: u64,
) -> GenotypeTable {
    GenotypeTable {
        cases: multinomial3(rng, r, case),
        controls: multinomial3(rng, s, control),
    }
}

/// Case-control genotype simulation under the additive model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig2 {
    /// Number of cases.
    pub r: u64,
    /// Number of controls.
    pub s: u64,
    /// Risk-allele frequency.
    pub p: f64,
    pub v0: f64,
    pub or2: f64,
    pub n_total: usize,
    pub n_assoc: usize,
    pub replicates: usize,
    pub seed: u64,
    pub lfdr_threshold: f64,
    pub ml: Option<MLBounds>,
    pub bh_alpha: Option<f64>,
}

impl Default for SimConfig2 {
    fn default() -> Self {
        SimConfig2 {
            r: 60_000,
            s: 120_000,
            p: 0.2,
            v0: 0.01,
            or2: 1.5,
            n_total: 1_000_000,
            n_assoc: 100_000,
            replicates: 100,
            seed: 1,
            lfdr_threshold: 0.05,
            ml: None,
            bh_alpha: Some(0.05),
        }
    }
}

impl SimConfig2 {
    /// Sets `n_assoc = round((1 - pi0) * n_total)`.
    pub fn with_pi0(mut self, pi0: f64) -> Self {
        self.n_assoc = ((1.0 - pi0) * self.n_total as f64).round() as usize;
        self
    }

    pub fn pi0(&self) -> f64 {
        1.0 - self.n_assoc as f64 / self.n_total as f64
    }

    pub(crate) fn scoring(&self) -> Scoring {
        Scoring {
            lfdr_threshold: self.lfdr_threshold,
            ml: self.ml,
            bh_alpha: self.bh_alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.s == 0 {
            return Err(Error::config("case and control counts must be positive"));
        }
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
        genotype_model(self.p, self.v0, self.or2)?;
        self.scoring().validate()
    }
}

fn draw_chunk(
    cfg: &SimConfig2,
    alt: &GenotypeModel,
    null: &GenotypeModel,
    replicate: usize,
    chunk: usize,
) -> (Vec<f64>, SimDiagnostics) {
    let start = chunk * SIM_CHUNK;
    let end = (start + SIM_CHUNK).min(cfg.n_total);
    let mut rng = stream_rng(cfg.seed, replicate, BLOCK_TABLES, chunk);
    let mut diag = SimDiagnostics::default();
    let mut xs = Vec::with_capacity(end - start);
    for i in start..end {
        let m = if i < cfg.n_assoc { alt } else { null };
        let x = loop {
            let t = draw_table(&mut rng, &m.case, &m.control, cfg.r, cfg.s);
            match t.allelic_chisq() {
                Some(x) => break x,
                None => diag.redrawn_tables += 1,
            }
        };
        xs.push(if x > 0.0 {
            x
        } else {
            diag.floored += 1;
            ZERO_FLOOR
        });
    }
    (xs, diag)
}

fn draw_replicate(
    cfg: &SimConfig2,
    replicate: usize,
    exec: Execution,
) -> Result<(StatVector, SimDiagnostics)> {
    let alt = genotype_model(cfg.p, cfg.v0, cfg.or2)?;
    let null = genotype_model(cfg.p, cfg.v0, 1.0)?;
    let chunks = cfg.n_total.div_ceil(SIM_CHUNK);
    let parts = exec::map_indices(exec, chunks, |c| draw_chunk(cfg, &alt, &null, replicate, c));
    let mut stats = Vec::with_capacity(cfg.n_total);
    let mut diag = SimDiagnostics::default();
    for (xs, d) in parts {
        stats.extend(xs);
        diag.absorb(&d);
    }
    Ok((StatVector::new(stats)?, diag))
}

/// Draws the allelic statistics of one replicate.
pub fn sample_sim2(config: &SimConfig2, replicate: usize, exec: Execution) -> Result<StatVector> {
    config.validate()?;
    Ok(draw_replicate(config, replicate, exec)?.0)
}

/// Runs the genotype-table protocol. Only `pi0` errors and discovery counts
/// are scored, since no single true `lambda` or LFDR exists.
pub fn run_sim2(config: &SimConfig2, exec: Execution) -> Result<Vec<MetricsReport>> {
    config.validate()?;
    let scoring = config.scoring();
    let mut per_replicate = Vec::with_capacity(config.replicates);
    for j in 0..config.replicates {
        let (stats, diag) = draw_replicate(config, j, exec)?;
        let truth = Truth {
            pi0: config.pi0(),
            lambda: None,
            n_assoc: config.n_assoc,
            psi: None,
        };
        let outcomes = score_replicate(&stats, &truth, &scoring, exec)?;
        log::debug!("sim2 replicate {j} done");
        per_replicate.push((outcomes, diag));
    }
    Ok(assemble(
        &scoring.labels(),
        per_replicate,
        config.pi0(),
        None,
        config.lfdr_threshold,
    ))
}
