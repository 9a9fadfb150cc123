//! Special functions for the chi-square(1) mixture model.
//!
//! Densities are defined for `x > 0` only: the chi-square(1) density has a
//! `1/sqrt(x)` pole at the origin, so `x <= 0` is reported as a domain error
//! instead of returning infinity.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
/// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// 1 / sqrt(pi)
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "chi-square density requires finite x > 0, got {x}"
        )))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "non-centrality must be finite and >= 0, got {lambda}"
        )))
    }
}

/// Density of the noncentral chi-square distribution with one degree of
/// freedom and non-centrality `lambda`.
///
/// `f(x) = (exp(-(sqrt(x) - sqrt(lambda))^2 / 2) + exp(-(sqrt(x) + sqrt(lambda))^2 / 2)) / (2 sqrt(2 pi x))`
pub fn noncentral_chisq1_pdf(x: f64, lambda: f64) -> Result<f64> {
    check_x(x)?;
    check_lambda(lambda)?;
    let (sx, sl) = (x.sqrt(), lambda.sqrt());
    let a = (-0.5 * (sx - sl) * (sx - sl)).exp();
    let b = (-0.5 * (sx + sl) * (sx + sl)).exp();
    Ok((a + b) / (2.0 * (2.0 * PI * x).sqrt()))
}

/// Central chi-square(1) density, `exp(-x/2) / sqrt(2 pi x)`.
pub fn central_chisq1_pdf(x: f64) -> Result<f64> {
    check_x(x)?;
    Ok((-0.5 * x).exp() / (2.0 * PI * x).sqrt())
}

/// Natural log of [`noncentral_chisq1_pdf`], finite wherever the density is
/// positive in exact arithmetic.
///
/// Uses `-(x + lambda)/2 - ln(2 sqrt(2 pi x)) + ln(2 cosh(sqrt(lambda x)))`
/// with the cosh term expanded as `t + ln(1 + exp(-2t))`; the leading `t` is
/// folded into the first term to give `-(sqrt(x) - sqrt(lambda))^2 / 2`.
pub fn noncentral_chisq1_logpdf(x: f64, lambda: f64) -> Result<f64> {
    check_x(x)?;
    check_lambda(lambda)?;
    Ok(logpdf_unchecked(x, lambda))
}

#[inline]
pub(crate) fn logpdf_unchecked(x: f64, lambda: f64) -> f64 {
    let (sx, sl) = (x.sqrt(), lambda.sqrt());
    let d = sx - sl;
    let t = sx * sl;
    -0.5 * d * d - LN_2 - LN_SQRT_2PI - 0.5 * x.ln() + (-2.0 * t).exp().ln_1p()
}

#[inline]
pub(crate) fn central_logpdf_unchecked(x: f64) -> f64 {
    -0.5 * x - LN_SQRT_2PI - 0.5 * x.ln()
}

/// `ln(cosh(t))` without overflow.
#[inline]
pub fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// Upper tail `P(X > x)` of the central chi-square(1) distribution.
///
/// Equals `erfc(sqrt(x/2))`; relative accuracy holds far into the tail.
pub fn central_chisq1_sf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!(
            "chi-square tail requires x >= 0, got {x}"
        )));
    }
    let h = 0.5 * x;
    Ok(erfc_sq(h.sqrt(), h))
}

/// `P(X <= x)` of the central chi-square(1) distribution.
pub fn central_chisq1_cdf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!(
            "chi-square cdf requires x >= 0, got {x}"
        )));
    }
    let h = 0.5 * x;
    Ok(erf_sq(h.sqrt(), h))
}

/// Below this argument erf is summed directly and erfc = 1 - erf; above it
/// erfc comes from its continued fraction.
const ERF_SERIES_LIMIT: f64 = 2.5;

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let v = erf_sq(a, a * a);
    v.copysign(x)
}

/// Complementary error function, accurate in relative terms for large `x`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        2.0 - erfc_sq(-x, x * x)
    } else {
        erfc_sq(x, x * x)
    }
}

/// erf for `x >= 0` given `x2 = x^2` separately (callers often know it
/// exactly, which avoids amplifying the rounding of `x` inside `exp(-x^2)`).
fn erf_sq(x: f64, x2: f64) -> f64 {
    if x < ERF_SERIES_LIMIT {
        erf_series(x, x2)
    } else {
        1.0 - erfc_cf(x, x2)
    }
}

fn erfc_sq(x: f64, x2: f64) -> f64 {
    if x < ERF_SERIES_LIMIT {
        1.0 - erf_series(x, x2)
    } else {
        erfc_cf(x, x2)
    }
}

/// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n (2x^2)^n x / (1*3*...*(2n+1)).
/// All terms are positive so there is no cancellation.
fn erf_series(x: f64, x2: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
/// evaluated with the modified Lentz algorithm.
fn erfc_cf(x: f64, x2: f64) -> f64 {
    if x2 > 750.0 {
        return 0.0;
    }
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let a = 0.5 * n as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI * (-x2).exp() / f
}

/// Standard normal cdf.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let h = 0.5 * z * z;
    let a = z.abs() * FRAC_1_SQRT_2;
    if z < 0.0 {
        0.5 * erfc_sq(a, h)
    } else {
        1.0 - 0.5 * erfc_sq(a, h)
    }
}

/// Standard normal upper tail `1 - Phi(z)`, accurate for large positive `z`.
pub fn std_normal_sf(z: f64) -> f64 {
    std_normal_cdf(-z)
}

/// Standard normal quantile `Phi^{-1}(p)` for `p` strictly inside (0, 1).
///
/// Acklam's rational approximation refined by two Halley steps against
/// [`std_normal_cdf`]. The upper half is computed by symmetry from `1 - p`,
/// which is exact for `p >= 0.5`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "normal quantile requires p in (0, 1), got {p}"
        )));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

/// Quantile for p in (0, 0.5].
fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    for _ in 0..2 {
        let e = std_normal_cdf(x) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        let step = u / (1.0 + 0.5 * x * u);
        if !step.is_finite() {
            break;
        }
        x -= step;
    }
    x
}

/// ln(Gamma(x)) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta `I_x(a, b)`, with `y = 1 - x` supplied by the
/// caller so that it can be formed without cancellation.
fn inc_beta(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_cf(x, a, b) / a).min(1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cf(y, b, a) / b).max(0.0)
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 100_000;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

fn check_df(df: f64) -> Result<()> {
    if df > 0.0 && !df.is_nan() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "degrees of freedom must be > 0, got {df}"
        )))
    }
}

/// Lower tail `P(T <= -|t|)` of Student's t, from
/// `I_{df/(df+t^2)}(df/2, 1/2) / 2`.
fn student_t_lower_tail(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let t2 = t * t;
    let denom = df + t2;
    0.5 * inc_beta(df / denom, t2 / denom, 0.5 * df, 0.5)
}

/// Student-t cdf with `df > 0` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if t.is_nan() {
        return Err(Error::domain("Student-t cdf of NaN"));
    }
    let tail = student_t_lower_tail(t, df);
    Ok(if t <= 0.0 { tail } else { 1.0 - tail })
}

/// Student-t upper tail `P(T > t)`, accurate for large positive `t`.
pub fn student_t_sf(t: f64, df: f64) -> Result<f64> {
    student_t_cdf(-t, df)
}

/// Draws one noncentral chi-square(1) variate as `(sqrt(lambda) + Z)^2`.
pub fn sample_noncentral_chisq1<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    let y = lambda.sqrt() + z;
    y * y
}
