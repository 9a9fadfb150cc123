use std::time::Instant;

use super::{FitDiagnostics, FitResult, LambdaStatus, Method, Pi0Clamp};
use crate::distributions::{central_logpdf_unchecked, log_cosh};
use crate::error::{Error, Result};
use crate::exec::{self, Execution, NeumaierSum};
use crate::mixture::MixtureParams;
use crate::stats::StatVector;

/// Search box and resolution for the maximum-likelihood fit.
///
/// `pi0` ranges over [0, 1] and `lambda` over `[c, d]`. Estimates depend on
/// the bounds, so `c` and `d` should be chosen deliberately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLBounds {
    pub c: f64,
    pub d: f64,
    pub pi0_grid: usize,
    pub lambda_grid: usize,
    /// Width below which the `lambda` refinement stops.
    pub tolerance: f64,
}

impl Default for MLBounds {
    fn default() -> Self {
        MLBounds {
            c: 0.0,
            d: 30.0,
            pi0_grid: 101,
            lambda_grid: 301,
            tolerance: 1e-6,
        }
    }
}

impl MLBounds {
    pub fn new(c: f64, d: f64) -> Result<Self> {
        let b = MLBounds {
            c,
            d,
            ..Default::default()
        };
        b.validate()?;
        Ok(b)
    }

    pub fn with_grid(mut self, pi0_grid: usize, lambda_grid: usize) -> Self {
        self.pi0_grid = pi0_grid;
        self.lambda_grid = lambda_grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!(
                "lower bound c must be >= 0, got {}",
                self.c
            )));
        }
        if !(self.d > self.c && self.d.is_finite()) {
            return Err(Error::config(format!(
                "upper bound d must exceed c, got c={} d={}",
                self.c, self.d
            )));
        }
        if self.pi0_grid < 2 || self.lambda_grid < 2 {
            return Err(Error::config("grid sizes must be at least 2"));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::config("refinement tolerance must be > 0"));
        }
        Ok(())
    }

    fn pi0_at(&self, k: usize) -> f64 {
        k as f64 / (self.pi0_grid - 1) as f64
    }

    fn lambda_at(&self, j: usize) -> f64 {
        if j + 1 == self.lambda_grid {
            self.d
        } else {
            self.c + j as f64 * self.lambda_step()
        }
    }

    fn lambda_step(&self) -> f64 {
        (self.d - self.c) / (self.lambda_grid - 1) as f64
    }
}

/// `ln(f_lambda(x) / f_0(x)) = -lambda/2 + ln cosh(sqrt(lambda x))`.
#[inline]
fn log_ratio(x: f64, lambda: f64) -> f64 {
    -0.5 * lambda + log_cosh((lambda * x).sqrt())
}

/// `ln(pi0 + (1 - pi0) exp(lr))` without overflow.
#[inline]
fn mix_term(pi0: f64, lr: f64) -> f64 {
    if pi0 >= 1.0 {
        0.0
    } else if pi0 <= 0.0 {
        lr
    } else if lr <= 0.0 {
        (pi0 + (1.0 - pi0) * lr.exp()).ln()
    } else {
        lr + ((1.0 - pi0) + pi0 * (-lr).exp()).ln()
    }
}

/// Score contribution `(1 - r) / (pi0 + (1 - pi0) r)` with `r = exp(lr)`.
#[inline]
fn score_term(pi0: f64, lr: f64) -> f64 {
    if lr <= 0.0 {
        let r = lr.exp();
        (1.0 - r) / (pi0 + (1.0 - pi0) * r)
    } else {
        let s = (-lr).exp();
        (s - 1.0) / (pi0 * s + (1.0 - pi0))
    }
}

/// Mixture log-likelihood `sum_i ln(pi0 f_0(x_i) + (1 - pi0) f_lambda(x_i))`.
pub fn log_likelihood(x: &StatVector, params: &MixtureParams) -> f64 {
    log_likelihood_with(x, params, Execution::default())
}

pub(crate) fn log_likelihood_with(x: &StatVector, params: &MixtureParams, exec: Execution) -> f64 {
    let pi0 = params.pi0();
    let lambda = params.lambda().unwrap_or(0.0);
    exec::sum_by(exec, x.stats(), |&v| {
        central_logpdf_unchecked(v) + mix_term(pi0, log_ratio(v, lambda))
    })
}

/// Best point of the coarse grid scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub pi0: f64,
    pub lambda: f64,
    /// `sum_i ln(pi0 + (1 - pi0) r_i)`, the log-likelihood minus its
    /// parameter-free part.
    pub profile: f64,
}

/// Coarse grid scan over `pi0_grid x lambda_grid` points.
///
/// For fixed `lambda` the log-likelihood is concave in `pi0`, so the best
/// `pi0` grid point is located by bisecting the sign of successive
/// differences instead of evaluating the whole column. Each `lambda` column
/// is summed sequentially, so the outcome does not depend on scheduling.
pub fn grid_scan(x: &StatVector, bounds: &MLBounds, exec: Execution) -> Result<GridPoint> {
    bounds.validate()?;
    let data = x.stats();
    let columns = exec::map_indices(exec, bounds.lambda_grid, |j| {
        let lambda = bounds.lambda_at(j);
        let lr: Vec<f64> = data.iter().map(|&v| log_ratio(v, lambda)).collect();
        let mut cache: Vec<Option<f64>> = vec![None; bounds.pi0_grid];
        let mut eval = |k: usize| -> f64 {
            *cache[k].get_or_insert_with(|| {
                let pi0 = bounds.pi0_at(k);
                let mut s = NeumaierSum::default();
                for &l in &lr {
                    s.add(mix_term(pi0, l));
                }
                s.value()
            })
        };
        let (mut lo, mut hi) = (0usize, bounds.pi0_grid - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if eval(mid + 1) > eval(mid) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (lo, eval(lo))
    });

    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for (j, &(k, v)) in columns.iter().enumerate() {
        if v > best.2 {
            best = (j, k, v);
        }
    }
    Ok(GridPoint {
        pi0: bounds.pi0_at(best.1),
        lambda: bounds.lambda_at(best.0),
        profile: best.2,
    })
}

/// Maximizes over `pi0` in [0, 1] for fixed `lambda` (the problem is concave
/// in `pi0`), by safeguarded Newton iteration on the score.
fn best_pi0(lr: &[f64], start: f64, exec: Execution) -> f64 {
    let score = |pi0: f64| {
        exec::compensated_sum2_by(exec, lr, |&l| {
            let g = score_term(pi0, l);
            (g, -g * g)
        })
    };
    if score(1.0).0 >= 0.0 {
        return 1.0;
    }
    if score(0.0).0 <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut pi0 = start.clamp(1e-6, 1.0 - 1e-6);
    for _ in 0..200 {
        let (g, h) = score(pi0);
        if g > 0.0 {
            lo = pi0;
        } else {
            hi = pi0;
        }
        let mut next = if h < 0.0 { pi0 - g / h } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - pi0).abs() < 1e-13 || hi - lo < 1e-13 {
            pi0 = next;
            break;
        }
        pi0 = next;
    }
    pi0
}

/// Maximum-likelihood fit over `[0, 1] x [c, d]`.
///
/// A coarse grid scan ([`grid_scan`]) is followed by a golden-section search
/// on the profile likelihood in `lambda` within one grid step of the best
/// grid point, maximizing over `pi0` exactly at each trial `lambda`. The
/// returned log-likelihood is never below that of the best grid point. When
/// the optimum is `pi0 = 1` the likelihood does not depend on `lambda`, which
/// is then reported as `c` and flagged.
pub fn fit_ml(x: &StatVector, bounds: &MLBounds) -> Result<FitResult> {
    fit_ml_with(x, bounds, Execution::default())
}

pub fn fit_ml_with(x: &StatVector, bounds: &MLBounds, exec: Execution) -> Result<FitResult> {
    let start = Instant::now();
    let grid = grid_scan(x, bounds, exec)?;
    let data = x.stats();

    let profile = |lambda: f64, pi0_start: f64| -> (f64, f64) {
        let lr = exec::map_slice(exec, data, |&v| log_ratio(v, lambda));
        let pi0 = best_pi0(&lr, pi0_start, exec);
        let value = exec::compensated_sum_by(exec, &lr, |&l| mix_term(pi0, l));
        (pi0, value)
    };

    let step = bounds.lambda_step();
    let (mut a, mut b) = (
        (grid.lambda - step).max(bounds.c),
        (grid.lambda + step).min(bounds.d),
    );
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut l1 = b - INV_PHI * (b - a);
    let mut l2 = a + INV_PHI * (b - a);
    let mut f1 = profile(l1, grid.pi0);
    let mut f2 = profile(l2, grid.pi0);
    while b - a > bounds.tolerance {
        if f1.1 >= f2.1 {
            b = l2;
            l2 = l1;
            f2 = f1;
            l1 = b - INV_PHI * (b - a);
            f1 = profile(l1, f2.0);
        } else {
            a = l1;
            l1 = l2;
            f1 = f2;
            l2 = a + INV_PHI * (b - a);
            f2 = profile(l2, f1.0);
        }
    }
    let (mut lambda, (mut pi0, _)) = if f1.1 >= f2.1 { (l1, f1) } else { (l2, f2) };

    let candidate = MixtureParams::new(pi0, lambda)?;
    let grid_params = MixtureParams::new(grid.pi0, grid.lambda)?;
    let mut ll = log_likelihood_with(x, &candidate, exec);
    let ll_grid = log_likelihood_with(x, &grid_params, exec);
    if ll.is_nan() || ll < ll_grid {
        pi0 = grid.pi0;
        lambda = grid.lambda;
        ll = ll_grid;
    }

    let (params, status) = if pi0 >= 1.0 {
        (
            MixtureParams::new(1.0, bounds.c)?,
            LambdaStatus::FlatAtLowerBound,
        )
    } else {
        (MixtureParams::new(pi0, lambda)?, LambdaStatus::Estimated)
    };

    Ok(FitResult {
        params,
        method: Method::Ml,
        diagnostics: FitDiagnostics {
            raw_pi0: None,
            raw_lambda: None,
            pi0_clamp: Pi0Clamp::None,
            lambda_status: status,
            log_likelihood: Some(ll),
            elapsed: start.elapsed(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::noncentral_chisq1_pdf;

    #[test]
    fn bounds_validation() {
        assert!(MLBounds::new(0.0, 30.0).is_ok());
        assert!(MLBounds::new(5.0, 5.0).is_err());
        assert!(MLBounds::new(6.0, 5.0).is_err());
        assert!(MLBounds::new(-1.0, 5.0).is_err());
        assert!(MLBounds::default().with_grid(1, 10).validate().is_err());
    }

    #[test]
    fn grid_endpoints() {
        let b = MLBounds::new(0.0, 10.0).unwrap().with_grid(11, 21);
        assert_eq!(b.pi0_at(0), 0.0);
        assert_eq!(b.pi0_at(10), 1.0);
        assert_eq!(b.lambda_at(0), 0.0);
        assert_eq!(b.lambda_at(20), 10.0);
        assert_eq!(b.lambda_at(10), 5.0);
    }

    #[test]
    fn mix_term_matches_direct_form() {
        for &pi0 in &[0.0, 0.2, 0.9, 1.0] {
            for &lr in &[-3.0, -0.1, 0.0, 0.4, 6.0] {
                let direct = (pi0 + (1.0 - pi0) * f64::exp(lr)).ln();
                assert!((mix_term(pi0, lr) - direct).abs() < 1e-14);
            }
        }
        assert!(mix_term(0.5, 1000.0).is_finite());
        assert_eq!(mix_term(1.0, 1000.0), 0.0);
    }

    #[test]
    fn log_likelihood_matches_densities() {
        let xs = vec![0.3, 1.2, 4.0, 9.5, 20.0];
        let s = StatVector::new(xs.clone()).unwrap();
        let p = MixtureParams::new(0.7, 6.0).unwrap();
        let direct: f64 = xs
            .iter()
            .map(|&x| {
                (0.7 * noncentral_chisq1_pdf(x, 0.0).unwrap()
                    + 0.3 * noncentral_chisq1_pdf(x, 6.0).unwrap())
                .ln()
            })
            .sum();
        assert!((log_likelihood(&s, &p) - direct).abs() < 1e-12);
    }
}
