//! `lfdr`: fit, decide, convert, simulate and benchmark from the command line.
//!
//! Exit codes: 0 success, 1 invalid configuration or usage, 2 I/O failure,
//! 3 numerical or data error.

mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lfdr_core::{ErrorClass, Execution};

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(PathBuf, std::io::Error),
    Domain(String),
    Core(lfdr_core::Error),
}

impl From<lfdr_core::Error> for CliError {
    fn from(e: lfdr_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Io(p, e) => write!(f, "I/O error on {}: {e}", p.display()),
            CliError::Domain(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        let class = match self {
            CliError::Config(_) => ErrorClass::Config,
            CliError::Io(..) => ErrorClass::Io,
            CliError::Domain(_) => ErrorClass::Domain,
            CliError::Core(e) => e.class(),
        };
        match class {
            ErrorClass::Config => 1,
            ErrorClass::Io => 2,
            ErrorClass::Domain => 3,
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if threads.is_some_and(|n| n != 1) {
        log::warn!("built without the parallel feature; --threads is ignored");
    }
    Ok(())
}

pub(crate) fn worker_threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();
    #[cfg(not(feature = "parallel"))]
    1
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Fit(a) => commands::fit_cmd(a, exec),
        Command::Decide(a) => commands::decide_cmd(a, exec),
        Command::Convert(a) => commands::convert_cmd(a),
        Command::Simulate1(a) => commands::simulate1_cmd(a, exec),
        Command::Simulate2(a) => commands::simulate2_cmd(a, exec),
        Command::Bench(a) => commands::bench_cmd(a),
    }
}

fn main() -> ExitCode {
    let argv = match args::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
