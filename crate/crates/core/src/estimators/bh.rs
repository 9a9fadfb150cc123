use crate::distributions::central_chisq1_sf;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::stats::StatVector;

/// Outcome of the Benjamini-Hochberg step-up procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct BhResult {
    /// Number of rejected hypotheses.
    pub k: usize,
    /// Rejection bits in the original item order.
    pub rejected: Vec<bool>,
    pub alpha: f64,
}

/// Benjamini-Hochberg step-up at FDR level `alpha`.
///
/// Sorts the p-values ascending (stable, so ties keep their input order),
/// finds the largest `k` with `p_(k) <= k/N * alpha` and rejects the `k`
/// smallest.
pub fn bh_stepup(p: &[f64], alpha: f64) -> Result<BhResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!("p-value {bad} outside [0, 1]")));
    }
    let n = p.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));

    let nf = n as f64;
    let k = order
        .iter()
        .enumerate()
        .rev()
        .find(|&(rank, &i)| p[i] <= (rank + 1) as f64 / nf * alpha)
        .map_or(0, |(rank, _)| rank + 1);

    let mut rejected = vec![false; n];
    for &i in &order[..k] {
        rejected[i] = true;
    }
    Ok(BhResult { k, rejected, alpha })
}

/// Chi-square(1) upper-tail p-values of the statistics.
pub fn stats_to_pvalues(x: &StatVector) -> Vec<f64> {
    stats_to_pvalues_with(x, Execution::default())
}

pub fn stats_to_pvalues_with(x: &StatVector, exec: Execution) -> Vec<f64> {
    exec::map_slice(exec, x.stats(), |&v| {
        central_chisq1_sf(v).expect("StatVector entries are positive")
    })
}
