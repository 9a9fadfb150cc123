use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use lfdr_core::estimators::{bh_stepup, fit, fit_ml_with, fit_mm_with, stats_to_pvalues_with};
use lfdr_core::ingest::{
    build_report, load_beta_se, read_report, read_stat_column, stats_from_chisq, stats_from_tstats,
    stats_from_z, write_report, write_report_to, ColumnMapping, ConversionDiagnostics,
    ConvertOptions, LfdrReport, ReadOptions, RowPolicy,
};
use lfdr_core::mixture::{decide_with, lfdr_all};
use lfdr_core::simulation::{
    default_pi0_levels, run_sim1, run_sim1_random_or, run_sim2, sample_sim1, write_metrics_csv,
    MetricsReport, RandomOr, SimConfig1, SimConfig2,
};
use lfdr_core::{threshold_hu, DecisionConfig, Execution, MLBounds, Method, StatVector};

use crate::args::{
    BenchArgs, BenchMethod, ConvertArgs, DecideArgs, DecisionArgs, FitArgs, FitMethod, Format,
    InputArgs, MlArgs, ScoringArgs, Sim1Args, Sim2Args,
};
use crate::CliError;

fn required<'a>(v: &'a Option<String>, flag: &str, format: &str) -> Result<&'a str, CliError> {
    v.as_deref()
        .ok_or_else(|| CliError::Config(format!("{flag} is required for --format {format}")))
}

fn load(args: &InputArgs) -> Result<StatVector, CliError> {
    let policy = if args.skip_malformed {
        RowPolicy::Skip
    } else {
        RowPolicy::Abort
    };
    let read = ReadOptions {
        delimiter: args.delimiter_byte()?,
        policy,
    };
    let convert = ConvertOptions {
        floor: args.floor,
        policy,
        ..Default::default()
    };
    let (stats, diag) = match args.format {
        Format::BetaSe => {
            let mapping = ColumnMapping {
                id: required(&args.id_col, "--id-col", "beta-se")?.to_string(),
                beta: required(&args.beta_col, "--beta-col", "beta-se")?.to_string(),
                se: required(&args.se_col, "--se-col", "beta-se")?.to_string(),
                p: args.p_col.clone(),
            };
            load_beta_se(&args.input, &mapping, &read, &convert)?
        }
        format => {
            let name = format!("{format:?}").to_lowercase();
            let column = required(&args.stat_col, "--stat-col", &name)?;
            let col = read_stat_column(&args.input, args.id_col.as_deref(), column, &read)?;
            let (stats, mut diag) = match format {
                Format::T => {
                    let df = args.df.ok_or_else(|| {
                        CliError::Config("--df is required for --format t".into())
                    })?;
                    stats_from_tstats(&col.values, df, col.ids, &convert)?
                }
                Format::Z => stats_from_z(&col.values, col.ids, &convert)?,
                _ => stats_from_chisq(col.values, col.ids, &convert)?,
            };
            diag.skipped += col.malformed;
            (stats, diag)
        }
    };
    log_conversion(&diag);
    log::info!(
        "loaded {} statistics from {}",
        stats.len(),
        args.input.display()
    );
    Ok(stats)
}

fn log_conversion(d: &ConversionDiagnostics) {
    if d.skipped > 0 {
        log::warn!("skipped {} malformed rows", d.skipped);
    }
    if d.floored > 0 {
        log::info!("floored {} zero statistics", d.floored);
    }
    if d.clamped > 0 {
        log::warn!("{} t tail probabilities clamped", d.clamped);
    }
    if d.p_mismatches > 0 {
        log::warn!(
            "{} of {} published p-values disagree with beta/se",
            d.p_mismatches,
            d.p_checked
        );
    }
}

pub(crate) fn decision(args: &DecisionArgs) -> Result<DecisionConfig, CliError> {
    let config = match (&args.u, args.losses.as_deref()) {
        (Some(u), _) => DecisionConfig::new(*u),
        (None, Some(&[l1, l2])) => DecisionConfig::from_losses(l1, l2),
        (None, Some(l)) => {
            return Err(CliError::Config(format!(
                "--losses takes two values, got {}",
                l.len()
            )))
        }
        (None, None) => Ok(DecisionConfig::default()),
    };
    config.map_err(|e| CliError::Config(e.to_string()))
}

fn bounds(args: &MlArgs) -> Result<MLBounds, CliError> {
    let d = args.d.ok_or_else(|| {
        CliError::Config("maximum likelihood needs an explicit lambda upper bound --d".into())
    })?;
    let b = MLBounds {
        c: args.c,
        d,
        ..Default::default()
    }
    .with_grid(args.pi0_grid, args.lambda_grid);
    b.validate()?;
    Ok(b)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(|f| BufWriter::with_capacity(1 << 20, f))
        .map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn emit_report(report: &LfdrReport, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => write_report(report, p)?,
        None => write_report_to(report, io::stdout().lock())?,
    }
    Ok(())
}

fn summarize(report: &LfdrReport) {
    let lambda = report
        .params
        .lambda()
        .map_or("NA".to_string(), |l| format!("{l:.6}"));
    eprintln!("method      {}", report.method);
    eprintln!("pi0         {:.6}", report.params.pi0());
    eprintln!("lambda      {lambda} ({})", report.lambda_status);
    eprintln!("u           {}", report.u);
    eprintln!("h_u         {:.6}", report.h_u);
    eprintln!("rejected    {} of {}", report.rejections(), report.len());
}

pub fn fit_cmd(args: &FitArgs, exec: Execution) -> Result<(), CliError> {
    let config = decision(&args.decision)?;
    let (method, b) = match args.method {
        FitMethod::Mm => (Method::Mm, MLBounds::default()),
        FitMethod::Ml => (Method::Ml, bounds(&args.ml)?),
        FitMethod::Bh => return bh_cmd(args, exec),
    };
    let stats = load(&args.input)?;
    let result = fit(&stats, method, &b, exec)?;
    log::info!("fit took {:.3}s", result.diagnostics.elapsed.as_secs_f64());
    if result.diagnostics.pi0_clamp != lfdr_core::Pi0Clamp::None {
        log::warn!("pi0 estimate clamped ({})", result.diagnostics.pi0_clamp);
    }
    let report = build_report(&stats, &result, &config, exec);
    emit_report(&report, args.output.as_deref())?;
    summarize(&report);
    Ok(())
}

fn bh_cmd(args: &FitArgs, exec: Execution) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Config(format!(
            "--alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    let stats = load(&args.input)?;
    let p = stats_to_pvalues_with(&stats, exec);
    let bh = bh_stepup(&p, args.alpha)?;
    let write = |w: &mut dyn Write| -> Result<(), lfdr_core::Error> {
        let header = format!(
            "# method=BH\n# alpha={}\n# rejections={}\n# n={}\n",
            bh.alpha,
            bh.k,
            stats.len()
        );
        w.write_all(header.as_bytes()).map_err(csv::Error::from)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["id", "x", "p", "reject"])?;
        for (i, (x, pv)) in stats.stats().iter().zip(&p).enumerate() {
            let r = if bh.rejected[i] { "1" } else { "0" };
            csv.write_record([stats.id(i), x.to_string(), pv.to_string(), r.into()])?;
        }
        csv.flush().map_err(csv::Error::from)?;
        Ok(())
    };
    write_to(args.output.as_deref(), write)?;
    eprintln!("method      BH");
    eprintln!("alpha       {}", bh.alpha);
    eprintln!("rejected    {} of {}", bh.k, stats.len());
    Ok(())
}

fn write_to<F>(output: Option<&Path>, write: F) -> Result<(), CliError>
where
    F: Fn(&mut dyn Write) -> Result<(), lfdr_core::Error>,
{
    match output {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w)?;
            w.flush().map_err(|e| CliError::Io(p.to_path_buf(), e))?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    Ok(())
}

pub fn decide_cmd(args: &DecideArgs, exec: Execution) -> Result<(), CliError> {
    let config = decision(&args.decision)?;
    let mut report = read_report(&args.report)?;
    let stats = StatVector::new(report.x.clone())?;
    report.u = config.u();
    report.h_u = threshold_hu(&report.params, &config);
    report.reject = decide_with(&stats, &report.params, &config, exec).reject;
    emit_report(&report, args.output.as_deref())?;
    summarize(&report);
    Ok(())
}

pub fn convert_cmd(args: &ConvertArgs) -> Result<(), CliError> {
    let stats = load(&args.input)?;
    let write = |w: &mut dyn Write| -> Result<(), lfdr_core::Error> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["id", "x"])?;
        for (i, x) in stats.stats().iter().enumerate() {
            csv.write_record([stats.id(i), x.to_string()])?;
        }
        csv.flush().map_err(csv::Error::from)?;
        Ok(())
    };
    write_to(args.output.as_deref(), write)?;
    eprintln!("converted   {} statistics", stats.len());
    Ok(())
}

struct Sweep {
    levels: Vec<f64>,
    ml: Option<MLBounds>,
    bh_alpha: Option<f64>,
}

fn sweep(args: &ScoringArgs) -> Result<Sweep, CliError> {
    let levels = if args.pi0.is_empty() {
        default_pi0_levels()
    } else {
        args.pi0.clone()
    };
    if let Some(p) = levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::Config(format!("pi0 level {p} outside [0, 1]")));
    }
    Ok(Sweep {
        levels,
        ml: if args.ml {
            Some(bounds(&args.bounds)?)
        } else {
            None
        },
        bh_alpha: if args.no_bh {
            None
        } else {
            Some(args.bh_alpha)
        },
    })
}

fn emit_metrics(reports: &[MetricsReport], output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(p) => {
            let mut w = create(p)?;
            write_metrics_csv(&mut w, reports)
                .and_then(|_| w.flush())
                .map_err(|e| CliError::Io(p.to_path_buf(), e))
        }
        None => write_metrics_csv(io::stdout().lock(), reports)
            .map_err(|e| CliError::Io("<stdout>".into(), e)),
    }
}

fn summarize_metrics(reports: &[MetricsReport]) {
    eprintln!("method  pi0_true  mean_pi0_hat  mse_pi0       precision");
    for r in reports {
        let f = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
        eprintln!(
            "{:<7} {:<9} {:<13} {:<13} {}",
            r.method.to_string(),
            r.pi0_true,
            f(r.mean_pi0_hat()),
            r.mse_pi0().map_or("NA".to_string(), |x| format!("{x:.3e}")),
            f(r.precision().ratio()),
        );
    }
}

pub fn simulate1_cmd(args: &Sim1Args, exec: Execution) -> Result<(), CliError> {
    let s = &args.scoring;
    let sw = sweep(s)?;
    let base = SimConfig1 {
        n_total: s.n_total,
        or_value: args.odds_ratio,
        sigma2: args.sigma2,
        replicates: s.replicates,
        seed: s.seed,
        random_or: args.random_or.then_some(RandomOr {
            mean: args.odds_ratio,
            sd: args.or_sd,
        }),
        lfdr_threshold: s.threshold,
        ml: sw.ml,
        bh_alpha: sw.bh_alpha,
        ..Default::default()
    };
    let mut reports = Vec::new();
    for &pi0 in &sw.levels {
        let cfg = base.clone().with_pi0(pi0);
        let started = Instant::now();
        let r = if args.random_or {
            run_sim1_random_or(&cfg, exec)?
        } else {
            run_sim1(&cfg, exec)?
        };
        log::info!("pi0={pi0}: {:.2}s", started.elapsed().as_secs_f64());
        reports.extend(r);
    }
    emit_metrics(&reports, s.output.as_deref())?;
    summarize_metrics(&reports);
    Ok(())
}

pub fn simulate2_cmd(args: &Sim2Args, exec: Execution) -> Result<(), CliError> {
    let s = &args.scoring;
    let sw = sweep(s)?;
    let base = SimConfig2 {
        r: args.cases,
        s: args.controls,
        p: args.allele_freq,
        v0: args.v0,
        or2: args.or2,
        n_total: s.n_total,
        replicates: s.replicates,
        seed: s.seed,
        lfdr_threshold: s.threshold,
        ml: sw.ml,
        bh_alpha: sw.bh_alpha,
        ..Default::default()
    };
    let mut reports = Vec::new();
    for &pi0 in &sw.levels {
        let cfg = base.clone().with_pi0(pi0);
        let started = Instant::now();
        let r = run_sim2(&cfg, exec)?;
        log::info!("pi0={pi0}: {:.2}s", started.elapsed().as_secs_f64());
        for report in &r {
            if report.diagnostics.redrawn_tables > 0 {
                log::info!(
                    "pi0={pi0}: {} tables redrawn",
                    report.diagnostics.redrawn_tables
                );
            }
        }
        reports.extend(r);
    }
    emit_metrics(&reports, s.output.as_deref())?;
    summarize_metrics(&reports);
    Ok(())
}

fn fastest<T, F: FnMut() -> T>(repeats: usize, mut f: F) -> (T, f64) {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..repeats {
        let t = Instant::now();
        let v = f();
        best = best.min(t.elapsed().as_secs_f64());
        out = Some(v);
    }
    (out.expect("at least one repeat"), best)
}

pub fn bench_cmd(args: &BenchArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::Config("--n must be positive".into()));
    }
    if args.repeats == 0 {
        return Err(CliError::Config("--repeats must be positive".into()));
    }
    let ml = match args.method {
        BenchMethod::Mm => None,
        _ => Some(bounds(&args.ml)?),
    };
    let cfg = SimConfig1 {
        n_total: args.n,
        seed: args.seed,
        replicates: 1,
        ..Default::default()
    }
    .with_pi0(args.pi0);
    let threads = crate::worker_threads();
    let n = args.n;
    let modes = [(Execution::Sequential, 1), (Execution::Parallel, threads)];
    let mut out = io::stdout().lock();
    let io_err = |e| CliError::Io("<stdout>".into(), e);
    writeln!(out, "task,execution,threads,seconds,items_per_second").map_err(io_err)?;
    let mut row = |task: &str, exec: Execution, threads: usize, secs: f64| {
        let mode = if exec == Execution::Sequential {
            "sequential"
        } else {
            "parallel"
        };
        let rate = n as f64 / secs.max(1e-9);
        writeln!(out, "{task},{mode},{threads},{secs:.6},{rate:.0}").map_err(io_err)
    };
    let mut outputs = Vec::new();
    for (exec, t) in modes {
        let (stats, secs) = fastest(args.repeats, || sample_sim1(&cfg, 0, exec));
        let stats = stats?;
        row("simulate", exec, t, secs)?;
        let mut fits = Vec::new();
        if args.method != BenchMethod::Ml {
            let (f, secs) = fastest(args.repeats, || fit_mm_with(&stats, exec));
            row("fit_mm", exec, t, secs)?;
            fits.push(f);
        }
        if let Some(b) = &ml {
            let (f, secs) = fastest(args.repeats, || fit_ml_with(&stats, b, exec));
            row("fit_ml", exec, t, secs)?;
            fits.push(f?);
        }
        let params = fits[0].params;
        let (psi, secs) = fastest(args.repeats, || lfdr_all(&stats, &params, exec));
        row("lfdr", exec, t, secs)?;
        outputs.push((stats, fits, psi));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    let same = a.0 == b.0
        && a.1.iter().zip(&b.1).all(|(x, y)| x.same_estimate(y))
        && a.2
            .iter()
            .zip(&b.2)
            .all(|(x, y)| x.to_bits() == y.to_bits());
    if !same {
        return Err(CliError::Domain(
            "sequential and parallel results differ".into(),
        ));
    }
    eprintln!("sequential and parallel results are identical ({threads} threads)");
    Ok(())
}
