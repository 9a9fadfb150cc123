#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1],
/// from Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss-Legendre quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    rule: &[(f64, f64)],
) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let part: f64 = rule.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum();
        total += 0.5 * h * part;
    }
    total
}

/// `int_0^inf f_lambda(x) dx` through the substitution `x = y^2`.
pub fn density_mass(lambda: f64) -> f64 {
    let rule = gauss_legendre(20);
    let upper = lambda.sqrt() + 40.0;
    integrate(
        |y| 2.0 * y * lfdr_core::distributions::noncentral_chisq1_pdf(y * y, lambda).unwrap(),
        0.0,
        upper,
        400,
        &rule,
    )
}

/// Exact mixture moments `E[X] = 1 + (1 - pi0) lambda`,
/// `E[X^2] = 3 + (1 - pi0)(lambda^2 + 6 lambda)`.
pub fn mixture_moments(pi0: f64, lambda: f64) -> lfdr_core::MomentSummary {
    let w = 1.0 - pi0;
    lfdr_core::MomentSummary {
        m1: 1.0 + w * lambda,
        m2: 3.0 + w * (lambda * lambda + 6.0 * lambda),
        n: 1,
    }
}
