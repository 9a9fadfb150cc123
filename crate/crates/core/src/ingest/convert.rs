use std::path::Path;

use super::{read_summary_file, ColumnMapping, ReadOptions, RowPolicy, SummaryStatRecord};
use crate::distributions::{central_chisq1_sf, std_normal_quantile, student_t_cdf};
use crate::error::{Error, Result};
use crate::simulation::ZERO_FLOOR;
use crate::stats::StatVector;

/// Smallest tail probability fed to the normal quantile when converting
/// t-statistics.
pub const TAIL_EPSILON: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvertOptions {
    /// Value substituted for statistics that are exactly zero.
    pub floor: f64,
    /// Relative tolerance of the published p-value cross-check.
    pub p_tolerance: f64,
    /// Handling of records with `se <= 0` or non-finite fields.
    pub policy: RowPolicy,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        ConvertOptions {
            floor: ZERO_FLOOR,
            p_tolerance: 1e-2,
            policy: RowPolicy::Abort,
        }
    }
}

impl ConvertOptions {
    fn validate(&self) -> Result<()> {
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::config(format!(
                "floor must be finite and > 0, got {}",
                self.floor
            )));
        }
        if self.p_tolerance.is_nan() || self.p_tolerance <= 0.0 {
            return Err(Error::config(format!(
                "p tolerance must be > 0, got {}",
                self.p_tolerance
            )));
        }
        Ok(())
    }
}

/// Counters collected while converting inputs to statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConversionDiagnostics {
    /// Statistics that were exactly zero and were floored.
    pub floored: u64,
    /// Records dropped by the reader or the converter under the skip policy.
    pub skipped: u64,
    /// Records whose published p-value was compared.
    pub p_checked: u64,
    /// Comparisons that disagreed beyond the tolerance.
    pub p_mismatches: u64,
    /// t-statistics whose tail probability was clamped to [`TAIL_EPSILON`].
    pub clamped: u64,
}

fn floor(x: f64, floor: f64, diag: &mut ConversionDiagnostics) -> f64 {
    if x == 0.0 {
        diag.floored += 1;
        floor
    } else {
        x
    }
}

fn finish(stats: Vec<f64>, ids: Option<Vec<String>>) -> Result<StatVector> {
    match ids {
        Some(ids) => StatVector::with_ids(stats, ids),
        None => StatVector::new(stats),
    }
}

/// `x_i = (beta_i / se_i)^2`.
///
/// When a record carries a p-value, it is compared with the chi-square tail
/// of `x_i`; disagreement beyond `p_tolerance` (relative) is logged and
/// counted but never changes the statistic.
pub fn stats_from_beta_se<I>(
    records: I,
    options: &ConvertOptions,
) -> Result<(StatVector, ConversionDiagnostics)>
where
    I: IntoIterator<Item = SummaryStatRecord>,
{
    convert_records(
        records.into_iter().map(Ok),
        options,
        ConversionDiagnostics::default(),
    )
}

fn convert_records<I>(
    records: I,
    options: &ConvertOptions,
    mut diag: ConversionDiagnostics,
) -> Result<(StatVector, ConversionDiagnostics)>
where
    I: Iterator<Item = Result<SummaryStatRecord>>,
{
    options.validate()?;
    let mut stats = Vec::new();
    let mut ids = Vec::new();
    for (n, rec) in records.enumerate() {
        let rec = rec?;
        if !(rec.se > 0.0 && rec.se.is_finite() && rec.beta.is_finite()) {
            let reason = format!(
                "record {} ({}): beta={} se={}",
                n + 1,
                rec.id,
                rec.beta,
                rec.se
            );
            match options.policy {
                RowPolicy::Abort => return Err(Error::domain(reason)),
                RowPolicy::Skip => {
                    log::warn!("skipping {reason}");
                    diag.skipped += 1;
                    continue;
                }
            }
        }
        let z = rec.beta / rec.se;
        let x = floor(z * z, options.floor, &mut diag);
        if !x.is_finite() {
            return Err(Error::domain(format!(
                "record {} ({}): statistic overflows",
                n + 1,
                rec.id
            )));
        }
        if let Some(p) = rec.p {
            if p > 0.0 {
                diag.p_checked += 1;
                let implied = central_chisq1_sf(x)?;
                if ((implied - p) / p).abs() > options.p_tolerance {
                    diag.p_mismatches += 1;
                    log::warn!("{}: published p {p} vs implied {implied}", rec.id);
                }
            }
        }
        stats.push(x);
        ids.push(rec.id);
    }
    Ok((finish(stats, Some(ids))?, diag))
}

/// Streams `path` through [`read_summary_file`] and [`stats_from_beta_se`]
/// without holding the records in memory.
pub fn load_beta_se(
    path: impl AsRef<Path>,
    mapping: &ColumnMapping,
    read: &ReadOptions,
    options: &ConvertOptions,
) -> Result<(StatVector, ConversionDiagnostics)> {
    let mut reader = read_summary_file(path, mapping, read)?;
    let (stats, mut diag) =
        convert_records(reader.by_ref(), options, ConversionDiagnostics::default())?;
    diag.skipped += reader.malformed();
    Ok((stats, diag))
}

/// `x_i = [Phi^{-1}(F_df(t_i))]^2`.
///
/// The smaller tail `F_df(-|t|)` is computed directly, so precision is not
/// lost to `1 - F`. Tails below [`TAIL_EPSILON`] are clamped to it and counted.
pub fn stats_from_tstats(
    t: &[f64],
    df: f64,
    ids: Option<Vec<String>>,
    options: &ConvertOptions,
) -> Result<(StatVector, ConversionDiagnostics)> {
    options.validate()?;
    if df.is_nan() || df <= 0.0 {
        return Err(Error::domain(format!(
            "degrees of freedom must be > 0, got {df}"
        )));
    }
    let mut diag = ConversionDiagnostics::default();
    let mut stats = Vec::with_capacity(t.len());
    for (i, &ti) in t.iter().enumerate() {
        if !ti.is_finite() {
            return Err(Error::domain(format!("t-statistic #{} is {ti}", i + 1)));
        }
        let mut tail = student_t_cdf(-ti.abs(), df)?;
        if tail < TAIL_EPSILON {
            diag.clamped += 1;
            tail = TAIL_EPSILON;
        }
        let z = std_normal_quantile(tail)?;
        stats.push(floor(z * z, options.floor, &mut diag));
    }
    Ok((finish(stats, ids)?, diag))
}

/// `x_i = z_i^2`.
pub fn stats_from_z(
    z: &[f64],
    ids: Option<Vec<String>>,
    options: &ConvertOptions,
) -> Result<(StatVector, ConversionDiagnostics)> {
    options.validate()?;
    let squared: Vec<f64> = z.iter().map(|v| v * v).collect();
    if let Some(i) = squared.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(format!("z-statistic #{} is {}", i + 1, z[i])));
    }
    stats_from_chisq(squared, ids, options)
}

/// Chi-square statistics as given, with exact zeros floored.
pub fn stats_from_chisq(
    x: Vec<f64>,
    ids: Option<Vec<String>>,
    options: &ConvertOptions,
) -> Result<(StatVector, ConversionDiagnostics)> {
    options.validate()?;
    let mut diag = ConversionDiagnostics::default();
    let x = x
        .into_iter()
        .map(|v| floor(v, options.floor, &mut diag))
        .collect();
    Ok((finish(x, ids)?, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::std_normal_cdf;

    fn rec(id: &str, beta: f64, se: f64, p: Option<f64>) -> SummaryStatRecord {
        SummaryStatRecord {
            id: id.into(),
            beta,
            se,
            p,
            extra: vec![],
        }
    }

    #[test]
    fn beta_se_square() {
        let (s, d) = stats_from_beta_se(
            vec![rec("a", 0.1, 0.05, None), rec("b", 0.0, 1.0, None)],
            &ConvertOptions::default(),
        )
        .unwrap();
        assert!((s.stats()[0] - 4.0).abs() < 1e-14);
        assert_eq!(s.stats()[1], 1e-12);
        assert_eq!(d.floored, 1);
        assert_eq!(s.id(1), "b");
    }

    #[test]
    fn bad_se_follows_policy() {
        let recs = vec![rec("a", 0.1, 0.05, None), rec("b", 0.1, 0.0, None)];
        assert!(stats_from_beta_se(recs.clone(), &ConvertOptions::default()).is_err());
        let opts = ConvertOptions {
            policy: RowPolicy::Skip,
            ..Default::default()
        };
        let (s, d) = stats_from_beta_se(recs, &opts).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(d.skipped, 1);
    }

    #[test]
    fn p_cross_check() {
        // x = 4 has tail probability 0.0455002638963584.
        let recs = vec![
            rec("ok", 0.1, 0.05, Some(0.0455)),
            rec("off", 0.1, 0.05, Some(0.2)),
        ];
        let (_, d) = stats_from_beta_se(recs, &ConvertOptions::default()).unwrap();
        assert_eq!(d.p_checked, 2);
        assert_eq!(d.p_mismatches, 1);
    }

    #[test]
    fn t_conversion() {
        let opts = ConvertOptions::default();
        let (s, d) = stats_from_tstats(&[0.0, 2.0, -2.0], 1e6, None, &opts).unwrap();
        assert_eq!(s.stats()[0], 1e-12);
        assert_eq!(d.floored, 1);
        assert!((s.stats()[1] - 4.0).abs() < 1e-3);
        assert_eq!(s.stats()[1], s.stats()[2]);
        let (s, d) = stats_from_tstats(&[80.0], 100.0, None, &opts).unwrap();
        assert_eq!(d.clamped, 1);
        let z = std_normal_quantile(TAIL_EPSILON).unwrap();
        assert_eq!(s.stats()[0], z * z);
        assert!(stats_from_tstats(&[1.0], 0.0, None, &opts).is_err());
    }

    #[test]
    fn t_conversion_keeps_tail_probability() {
        let (s, _) = stats_from_tstats(&[3.0], 100.0, None, &ConvertOptions::default()).unwrap();
        let z = -s.stats()[0].sqrt();
        let want = student_t_cdf(-3.0, 100.0).unwrap();
        assert!(((std_normal_cdf(z) - want) / want).abs() < 1e-10);
    }

    #[test]
    fn z_and_chisq() {
        let opts = ConvertOptions::default();
        let (s, _) = stats_from_z(&[-2.0, 0.0], None, &opts).unwrap();
        assert_eq!(s.stats(), &[4.0, 1e-12]);
        assert!(stats_from_chisq(vec![-1.0], None, &opts).is_err());
    }
}
