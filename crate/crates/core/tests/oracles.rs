#![allow(clippy::excessive_precision)]

mod common;

use lfdr_core::distributions::{
    central_chisq1_cdf, central_chisq1_pdf, central_chisq1_sf, ln_gamma, noncentral_chisq1_logpdf,
    noncentral_chisq1_pdf, sample_noncentral_chisq1, std_normal_cdf, std_normal_quantile,
    student_t_cdf,
};
use lfdr_core::{lfdr, threshold_hu, DecisionConfig, MixtureParams};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Poisson-weighted central chi-square series for the noncentral density.
fn poisson_series_pdf(x: f64, lambda: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..400 {
        let k = 1.0 + 2.0 * j as f64;
        let log_w = -0.5 * lambda + j as f64 * (0.5 * lambda).ln() - ln_gamma(j as f64 + 1.0);
        let log_c = (0.5 * k - 1.0) * x.ln() - 0.5 * x - 0.5 * k * 2f64.ln() - ln_gamma(0.5 * k);
        let term = (log_w + log_c).exp();
        total += term;
        if j > 10 && term < total * 1e-17 {
            break;
        }
    }
    total
}

#[test]
fn density_matches_series_oracle() {
    for &(x, lambda) in &[
        (4.0, 16.44),
        (0.3, 1.0),
        (20.0, 4.524),
        (55.0, 50.0),
        (1e-3, 2.0),
    ] {
        let got = noncentral_chisq1_pdf(x, lambda).unwrap();
        assert!(
            rel(got, poisson_series_pdf(x, lambda)) < 1e-12,
            "x={x} lambda={lambda}"
        );
    }
    // 50-digit reference.
    let got = noncentral_chisq1_pdf(4.0, 16.44).unwrap();
    assert!(rel(got, 0.012_082_721_395_139_9) < 1e-13);
}

#[test]
fn density_is_mean_of_shifted_normals() {
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cases: [(f64, f64); 4] = [(0.5, 3.0), (9.0, 16.44), (2.0, 0.0), (40.0, 30.0)];
    for (x, lambda) in cases {
        let s = x.sqrt();
        let want = 0.5 * (phi(s - lambda.sqrt()) + phi(s + lambda.sqrt())) / s;
        assert!(rel(noncentral_chisq1_pdf(x, lambda).unwrap(), want) < 1e-13);
    }
}

#[test]
fn central_density_closed_form() {
    let want = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    assert!(rel(noncentral_chisq1_pdf(1.0, 0.0).unwrap(), want) < 1e-15);
    assert!(rel(central_chisq1_pdf(1.0).unwrap(), 0.241_970_724_519_143_37) < 1e-14);
}

#[test]
fn log_density_far_tail() {
    // 50-digit references; the naive cosh form overflows here.
    let v = noncentral_chisq1_logpdf(5000.0, 30.0).unwrap();
    assert!(rel(v, -2_133.572_347_688_731) < 1e-13);
    let v = noncentral_chisq1_logpdf(1.0, 0.0).unwrap();
    assert!(rel(v, -1.418_938_533_204_672_7) < 1e-15);
    for &(x, l) in &[(3.0, 2.0), (30.0, 16.44), (0.01, 9.0)] {
        let a = noncentral_chisq1_logpdf(x, l).unwrap().exp();
        assert!(rel(a, noncentral_chisq1_pdf(x, l).unwrap()) < 1e-13);
    }
}

#[test]
fn density_normalizes() {
    for lambda in [0.0, 1.0, 4.524, 16.44, 50.0] {
        assert!(
            (common::density_mass(lambda) - 1.0).abs() < 1e-8,
            "lambda={lambda}"
        );
    }
}

#[test]
fn chisq_tail_frozen_values() {
    // 50-digit references.
    let cases = [
        (3.841_459, 0.049_999_994_653_195_765),
        (29.7168, 4.999_962_574_807_078_7e-8),
        (0.5, 0.479_500_122_186_953_46),
        (10.0, 0.001_565_402_258_002_549_7),
        (50.0, 1.537_459_794_428_034_8e-12),
        (100.0, 1.523_970_604_832_105_2e-23),
        (200.0, 2.088_487_583_762_544_8e-45),
        (300.0, 3.294_362_383_314_041_2e-67),
    ];
    for (x, want) in cases {
        let got = central_chisq1_sf(x).unwrap();
        assert!(rel(got, want) < 1e-10, "x={x}: {got} vs {want}");
    }
    assert!((central_chisq1_sf(3.841_458_820_694_124).unwrap() - 0.05).abs() < 1e-15);
}

#[test]
fn chisq_tail_agrees_with_statrs() {
    let d = ChiSquared::new(1.0).unwrap();
    for i in 1..400 {
        let x = i as f64 * 0.1;
        let got = central_chisq1_cdf(x).unwrap();
        assert!((got - d.cdf(x)).abs() < 1e-12, "x={x}");
        let sf = central_chisq1_sf(x).unwrap();
        assert!((sf + got - 1.0).abs() < 1e-12);
    }
}

#[test]
fn normal_functions() {
    assert!(rel(std_normal_cdf(-8.0), 6.220_960_574_271_784e-16) < 1e-12);
    assert!(rel(std_normal_cdf(-30.0), 4.906_713_927_148_187e-198) < 1e-10);
    let frozen = [
        (-3.6, 1.591_085_901_575_338_3e-4),
        (-2.8, 2.555_130_330_427_934_2e-3),
        (-1.5, 6.680_720_126_885_806_6e-2),
        (0.5, 0.691_462_461_274_013_1),
        (2.0, 0.977_249_868_051_820_8),
    ];
    for (z, want) in frozen {
        assert!(rel(std_normal_cdf(z), want) < 5e-14, "z={z}");
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    for i in -60..=60 {
        let z = i as f64 * 0.1;
        assert!(rel(std_normal_cdf(z), n.cdf(z)) < 1e-9, "z={z}");
    }
    for &p in &[1e-15, 1e-8, 0.01, 0.3, 0.5, 0.77, 0.999] {
        let z = std_normal_quantile(p).unwrap();
        assert!(rel(std_normal_cdf(z), p) < 1e-13, "p={p}");
    }
    assert!(std_normal_quantile(0.0).is_err());
    assert!(std_normal_quantile(1.0).is_err());
}

#[test]
fn student_t_values() {
    // 50-digit references from the regularized incomplete beta function.
    let cases = [
        (2.0, 100.0, 0.975_893_910_634_433_16),
        (-3.5, 100.0, 3.482_138_586_781_344_6e-4),
        (1.3, 5.0, 0.874_849_682_914_661_38),
        (-10.0, 3.0, 1.064_199_529_207_075e-3),
    ];
    for (t, df, want) in cases {
        assert!(
            rel(student_t_cdf(t, df).unwrap(), want) < 1e-10,
            "t={t} df={df}"
        );
    }
    let d = StudentsT::new(0.0, 1.0, 100.0).unwrap();
    for i in -40..=40 {
        let t = i as f64 * 0.2;
        assert!((student_t_cdf(t, 100.0).unwrap() - d.cdf(t)).abs() < 1e-10);
    }
    assert_eq!(student_t_cdf(0.0, 7.0).unwrap(), 0.5);
    for i in -40..=40 {
        let t = i as f64 * 0.1;
        assert!((student_t_cdf(t, 1e6).unwrap() - std_normal_cdf(t)).abs() < 1e-4);
    }
    assert!(student_t_cdf(1.0, 0.0).is_err());
}

#[test]
fn lfdr_matches_ratio_of_densities() {
    let p = MixtureParams::new(0.9, 16.44).unwrap();
    let direct = |x: f64| {
        let f0 = central_chisq1_pdf(x).unwrap();
        let f1 = noncentral_chisq1_pdf(x, 16.44).unwrap();
        0.9 * f0 / (0.9 * f0 + 0.1 * f1)
    };
    let got = lfdr(16.44, &p).unwrap();
    assert!(rel(got, direct(16.44)) < 1e-12);
    assert!(rel(got, 0.004_822_501_945_166_655_9) < 1e-12);
    for &x in &[0.01, 0.5, 3.0, 9.0, 25.0] {
        assert!(rel(lfdr(x, &p).unwrap(), direct(x)) < 1e-12, "x={x}");
    }
}

#[test]
fn hu_matches_bisection() {
    let p = MixtureParams::new(0.9, 16.44).unwrap();
    let u = 0.2;
    let (mut lo, mut hi) = (1e-9, 1e3);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if lfdr(mid, &p).unwrap() < u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h = threshold_hu(&p, &DecisionConfig::new(u).unwrap());
    assert!((h - 0.5 * (lo + hi)).abs() < 1e-8);
    assert!((h - 9.499_188_813_249_049).abs() < 1e-10);
}

#[test]
fn lfdr_limit_at_zero() {
    for &(pi0, lambda) in &[(0.9, 16.44), (0.3, 2.0), (0.99, 0.5)] {
        let p = MixtureParams::new(pi0, lambda).unwrap();
        assert!((lfdr(1e-12, &p).unwrap() - p.lfdr_at_zero()).abs() < 1e-9);
    }
}

#[test]
fn sampled_moments_match_theory() {
    let mut rng = common::rng(17);
    let n = 1_000_000;
    for lambda in [0.0, 4.524, 16.44] {
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_noncentral_chisq1(&mut rng, lambda))
            .collect();
        let m1 = draws.iter().sum::<f64>() / n as f64;
        let m2 = draws.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let var1 = 2.0 + 4.0 * lambda;
        let e2 = lambda * lambda + 6.0 * lambda + 3.0;
        let var2 = draws.iter().map(|x| (x * x - e2).powi(2)).sum::<f64>() / n as f64;
        assert!(
            (m1 - 1.0 - lambda).abs() < 4.0 * (var1 / n as f64).sqrt(),
            "lambda={lambda}"
        );
        assert!(
            (m2 - e2).abs() < 4.0 * (var2 / n as f64).sqrt(),
            "lambda={lambda}"
        );
    }
}
