mod common;

use lfdr_core::distributions::sample_noncentral_chisq1;
use lfdr_core::estimators::{fit_ml_with, fit_mm_with, grid_scan, log_likelihood};
use lfdr_core::{
    bh_stepup, fit_ml, fit_mm, moments, stats_to_pvalues, Execution, LambdaStatus, MLBounds,
    MixtureParams, Pi0Clamp, StatVector,
};

fn mixture(n: usize, pi0: f64, lambda: f64, seed: u64) -> StatVector {
    let mut rng = common::rng(seed);
    let n_alt = ((1.0 - pi0) * n as f64).round() as usize;
    let x = (0..n)
        .map(|i| sample_noncentral_chisq1(&mut rng, if i < n_alt { lambda } else { 0.0 }))
        .collect();
    StatVector::new(x).unwrap()
}

fn coarse() -> MLBounds {
    MLBounds::default().with_grid(21, 61)
}

#[test]
fn central_sample_moments() {
    let m = moments(&mixture(1_000_000, 1.0, 0.0, 3));
    assert!((m.m1 - 1.0).abs() < 4.0 * (2e-6f64).sqrt(), "m1 {}", m.m1);
    assert!((m.m2 - 3.0).abs() < 4.0 * (96e-6f64).sqrt(), "m2 {}", m.m2);
}

#[test]
fn ml_on_central_data_finds_no_signal() {
    let s = mixture(100_000, 1.0, 0.0, 4);
    let f = fit_ml(&s, &coarse()).unwrap();
    assert!(f.params.pi0() >= 0.98, "pi0 {}", f.params.pi0());
}

#[test]
fn ml_and_mm_agree_on_clean_mixtures() {
    let s = mixture(200_000, 0.9, 16.44, 5);
    let mm = fit_mm(&s);
    let ml = fit_ml(&s, &coarse()).unwrap();
    assert!((mm.params.pi0() - ml.params.pi0()).abs() < 0.01);
    let (a, b) = (mm.params.lambda().unwrap(), ml.params.lambda().unwrap());
    assert!((a - b).abs() < 0.5, "MM {a} ML {b}");
    assert_eq!(ml.diagnostics.lambda_status, LambdaStatus::Estimated);
}

#[test]
fn ml_never_loses_to_its_grid() {
    let s = mixture(20_000, 0.7, 6.0, 6);
    let b = coarse();
    let g = grid_scan(&s, &b, Execution::default()).unwrap();
    let f = fit_ml(&s, &b).unwrap();
    let at_grid = log_likelihood(&s, &MixtureParams::new(g.pi0, g.lambda).unwrap());
    assert!(f.diagnostics.log_likelihood.unwrap() >= at_grid);
    let ll = log_likelihood(&s, &f.params);
    assert!((ll - f.diagnostics.log_likelihood.unwrap()).abs() <= 1e-9 * ll.abs());
    let off = MixtureParams::new(0.5, 12.0).unwrap();
    assert!(ll > log_likelihood(&s, &off));
}

#[test]
fn ml_respects_lambda_bounds() {
    let s = mixture(20_000, 0.8, 25.0, 7);
    let b = MLBounds::new(1.0, 10.0).unwrap().with_grid(11, 31);
    let l = fit_ml(&s, &b).unwrap().params.lambda().unwrap();
    assert!((1.0..=10.0).contains(&l));
    assert!(MLBounds::new(5.0, 5.0).is_err());
    assert!(MLBounds::new(-1.0, 5.0).is_err());
}

#[test]
fn fits_do_not_depend_on_execution() {
    let s = mixture(150_000, 0.85, 9.0, 8);
    assert!(
        fit_mm_with(&s, Execution::Sequential).same_estimate(&fit_mm_with(&s, Execution::Parallel))
    );
    let b = coarse();
    let a = fit_ml_with(&s, &b, Execution::Sequential).unwrap();
    assert!(a.same_estimate(&fit_ml_with(&s, &b, Execution::Parallel).unwrap()));
}

#[test]
fn mm_error_shrinks_with_n() {
    let err = |n: usize| {
        (0..10)
            .map(|seed| {
                let p = fit_mm(&mixture(n, 0.9, 16.44, 100 + seed)).params;
                (p.pi0() - 0.9).powi(2) + ((p.lambda().unwrap_or(0.0) - 16.44) / 16.44).powi(2)
            })
            .sum::<f64>()
            / 10.0
    };
    let (small, large) = (err(10_000), err(1_000_000));
    assert!(large < small, "N=1e4 {small}, N=1e6 {large}");
}

#[test]
fn mm_null_verdict() {
    let s = StatVector::new(vec![0.2, 0.4, 0.1, 0.9]).unwrap();
    let f = fit_mm(&s);
    assert_eq!(f.params.pi0(), 1.0);
    assert_eq!(f.params.lambda(), None);
    assert_eq!(f.diagnostics.lambda_status, LambdaStatus::Undefined);
    assert_eq!(f.diagnostics.pi0_clamp, Pi0Clamp::High);
}

#[test]
fn bh_controls_fdr() {
    let (n, n_alt, alpha) = (20_000, 1000, 0.1);
    let mut fdp = 0.0;
    for seed in 0..20 {
        let s = mixture(n, 1.0 - n_alt as f64 / n as f64, 12.0, 200 + seed);
        let r = bh_stepup(&stats_to_pvalues(&s), alpha).unwrap();
        let false_hits = r.rejected[n_alt..].iter().filter(|&&b| b).count();
        fdp += false_hits as f64 / r.k.max(1) as f64;
    }
    let fdr = fdp / 20.0;
    assert!(fdr <= alpha * 1.2, "empirical FDR {fdr}");
    assert!(fdr > 0.0);
}

#[test]
fn bh_handles_ties_and_bad_input() {
    let r = bh_stepup(&[0.01, 0.01, 0.01, 0.9], 0.05).unwrap();
    assert_eq!(r.k, 3);
    assert!(bh_stepup(&[0.5, 1.2], 0.05).is_err());
    assert!(bh_stepup(&[0.5], 0.0).is_err());
}
