//! The two-component chi-square(1) mixture: LFDR, rejection cutoff and the
//! Bayes decision rule.

use std::f64::consts::LN_2;

use crate::distributions::log_cosh;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::stats::StatVector;

/// Mixture parameters `(pi0, lambda)`.
///
/// `lambda` is `None` ("undefined") only for the no-signal verdict `pi0 = 1`,
/// where the non-null component carries no weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pi0: f64,
    lambda: Option<f64>,
}

impl MixtureParams {
    pub fn new(pi0: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::domain(format!("pi0 must lie in [0, 1], got {pi0}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(MixtureParams {
            pi0,
            lambda: Some(lambda),
        })
    }

    /// `pi0 = 1` with an undefined non-centrality.
    pub fn null() -> Self {
        MixtureParams {
            pi0: 1.0,
            lambda: None,
        }
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    /// Largest attainable LFDR, the `x -> 0` limit
    /// `pi0 / (pi0 + (1 - pi0) exp(-lambda/2))`.
    pub fn lfdr_at_zero(&self) -> f64 {
        match self.lambda {
            _ if self.pi0 >= 1.0 => 1.0,
            _ if self.pi0 <= 0.0 => 0.0,
            None => 1.0,
            Some(l) => self.pi0 / (self.pi0 + (1.0 - self.pi0) * (-0.5 * l).exp()),
        }
    }
}

/// LFDR threshold `u` of the decision rule "reject when psi(x) < u".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig {
    u: f64,
}

impl DecisionConfig {
    pub const DEFAULT_U: f64 = 0.2;

    pub fn new(u: f64) -> Result<Self> {
        if u > 0.0 && u < 1.0 {
            Ok(DecisionConfig { u })
        } else {
            Err(Error::domain(format!(
                "threshold u must lie in (0, 1), got {u}"
            )))
        }
    }

    /// Threshold implied by type-I and type-II losses: `u = l_II / (l_I + l_II)`.
    pub fn from_losses(loss_type1: f64, loss_type2: f64) -> Result<Self> {
        let ok = |l: f64| l > 0.0 && l.is_finite();
        if !ok(loss_type1) || !ok(loss_type2) {
            return Err(Error::domain(format!(
                "losses must be finite and > 0, got l_I={loss_type1}, l_II={loss_type2}"
            )));
        }
        Self::new(loss_type2 / (loss_type1 + loss_type2))
    }

    pub fn u(&self) -> f64 {
        self.u
    }
}

impl Default for DecisionConfig {
    fn default() -> Self {
        DecisionConfig { u: Self::DEFAULT_U }
    }
}

/// Per-item decisions; `reject[i]` is true when H0 for item `i` is rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub reject: Vec<bool>,
}

impl Decision {
    pub fn rejections(&self) -> usize {
        self.reject.iter().filter(|&&r| r).count()
    }
}

/// Local false discovery rate
/// `psi(x) = pi0 / (pi0 + (1 - pi0) exp(-lambda/2) cosh(sqrt(lambda x)))`.
///
/// Evaluated as a logistic function of the log posterior odds so that large
/// `sqrt(lambda x)` cannot overflow.
pub fn lfdr(x: f64, params: &MixtureParams) -> Result<f64> {
    if !(x > 0.0 && !x.is_nan()) {
        return Err(Error::domain(format!("lfdr requires x > 0, got {x}")));
    }
    Ok(lfdr_unchecked(x, params))
}

#[inline]
pub(crate) fn lfdr_unchecked(x: f64, params: &MixtureParams) -> f64 {
    let pi0 = params.pi0;
    if pi0 >= 1.0 {
        return 1.0;
    }
    if pi0 <= 0.0 {
        return 0.0;
    }
    match params.lambda {
        None => 1.0,
        Some(0.0) => pi0,
        Some(l) => {
            let log_odds = ((1.0 - pi0) / pi0).ln() - 0.5 * l + log_cosh((l * x).sqrt());
            logistic_neg(log_odds)
        }
    }
}

/// `1 / (1 + exp(t))`, stable for both signs of `t`.
#[inline]
fn logistic_neg(t: f64) -> f64 {
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// LFDR of every statistic, in input order.
pub fn lfdr_all(stats: &StatVector, params: &MixtureParams, exec: Execution) -> Vec<f64> {
    exec::map_slice(exec, stats.stats(), |&x| lfdr_unchecked(x, params))
}

/// Statistic cutoff `h_u`: `psi(x) < u` exactly when `x > h_u`.
///
/// With `k_u = pi0/(1-pi0) * (1-u)/u * exp(lambda/2)`, `h_u = 0` when
/// `k_u <= 1` and `arcosh(k_u)^2 / lambda` otherwise. `k_u` is handled on the
/// log scale. Returns `+inf` when nothing can be rejected (`pi0 = 1`, or
/// `lambda = 0` with `pi0 >= u`).
pub fn threshold_hu(params: &MixtureParams, config: &DecisionConfig) -> f64 {
    let pi0 = params.pi0;
    let u = config.u;
    if pi0 >= 1.0 {
        return f64::INFINITY;
    }
    if pi0 <= 0.0 {
        return 0.0;
    }
    let lambda = match params.lambda {
        None => return f64::INFINITY,
        Some(l) => l,
    };
    if lambda == 0.0 {
        return if pi0 < u { 0.0 } else { f64::INFINITY };
    }
    let ln_k = (pi0 / (1.0 - pi0)).ln() + ((1.0 - u) / u).ln() + 0.5 * lambda;
    if ln_k <= 0.0 {
        return 0.0;
    }
    let acosh = if ln_k > 20.0 {
        // arcosh(k) = ln(2k) - 1/(4k^2) - ...; the correction is below 1 ulp here.
        ln_k + LN_2
    } else {
        let km1 = ln_k.exp_m1();
        (km1 + (km1 * (km1 + 2.0)).sqrt()).ln_1p()
    };
    acosh * acosh / lambda
}

/// Applies the rule "reject H0_i iff x_i > h_u".
pub fn decide(stats: &StatVector, params: &MixtureParams, config: &DecisionConfig) -> Decision {
    decide_with(stats, params, config, Execution::default())
}

pub fn decide_with(
    stats: &StatVector,
    params: &MixtureParams,
    config: &DecisionConfig,
    exec: Execution,
) -> Decision {
    let h = threshold_hu(params, config);
    Decision {
        reject: exec::map_slice(exec, stats.stats(), |&x| x > h),
    }
}
