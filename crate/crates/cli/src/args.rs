use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "lfdr",
    version,
    about = "LFDR estimation for chi-square(1) association statistics"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for data-parallel loops; 0 uses every core.
    #[arg(long, global = true, env = "LFDR_THREADS", value_name = "N")]
    pub threads: Option<usize>,

    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    /// File of `key=value` lines, each read as `--key value`. Options given
    /// on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// More logging (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit (pi0, lambda), then write per-item LFDRs and decisions.
    Fit(FitArgs),
    /// Re-apply the decision rule to an existing report at a new threshold.
    Decide(DecideArgs),
    /// Convert an input file to chi-square statistics (`id,x`).
    Convert(ConvertArgs),
    /// Normal log-OR simulation; writes a metrics CSV.
    Simulate1(Sim1Args),
    /// Case-control genotype simulation; writes a metrics CSV.
    Simulate2(Sim2Args),
    /// Time sequential against parallel execution on simulated data.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Effect size and standard error columns; x = (beta / se)^2.
    BetaSe,
    /// Student t statistics with `--df` degrees of freedom.
    T,
    /// Standard normal z statistics.
    Z,
    /// Chi-square(1) statistics used as given.
    Chisq,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Delimited text file with a header row.
    #[arg(short, long, value_name = "FILE")]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::BetaSe)]
    pub format: Format,

    /// Field delimiter: `tab`, `comma` or a single character.
    #[arg(long, default_value = "tab")]
    pub delimiter: String,

    #[arg(long, value_name = "COLUMN")]
    pub id_col: Option<String>,

    #[arg(long, value_name = "COLUMN")]
    pub beta_col: Option<String>,

    #[arg(long, value_name = "COLUMN")]
    pub se_col: Option<String>,

    /// Published p-values, cross-checked against beta/se.
    #[arg(long, value_name = "COLUMN")]
    pub p_col: Option<String>,

    /// Statistic column for the t, z and chisq formats.
    #[arg(long, value_name = "COLUMN")]
    pub stat_col: Option<String>,

    /// Degrees of freedom of t statistics.
    #[arg(long)]
    pub df: Option<f64>,

    /// Drop malformed rows with a warning instead of stopping.
    #[arg(long)]
    pub skip_malformed: bool,

    /// Replacement for statistics that are exactly zero.
    #[arg(long, default_value_t = 1e-12)]
    pub floor: f64,
}

impl InputArgs {
    pub fn delimiter_byte(&self) -> Result<u8, CliError> {
        match self.delimiter.as_str() {
            "tab" | "\\t" => Ok(b'\t'),
            "comma" => Ok(b','),
            d if d.len() == 1 => Ok(d.as_bytes()[0]),
            d => Err(CliError::Config(format!(
                "delimiter must be tab, comma or one character, got '{d}'"
            ))),
        }
    }
}

#[derive(Debug, Args)]
pub struct DecisionArgs {
    /// Reject when the LFDR is below this value.
    #[arg(long, conflicts_with = "losses")]
    pub u: Option<f64>,

    /// Type-I and type-II losses `L1,L2`; sets u = L2 / (L1 + L2).
    #[arg(long, value_delimiter = ',', value_name = "L1,L2")]
    pub losses: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethod {
    Mm,
    Ml,
    /// Benjamini-Hochberg on the chi-square(1) p-values.
    Bh,
}

#[derive(Debug, Args)]
pub struct MlArgs {
    /// Lower bound of lambda for maximum likelihood.
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,

    /// Upper bound of lambda for maximum likelihood (required with ML).
    #[arg(long)]
    pub d: Option<f64>,

    #[arg(long, default_value_t = 101)]
    pub pi0_grid: usize,

    #[arg(long, default_value_t = 301)]
    pub lambda_grid: usize,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub decision: DecisionArgs,

    #[arg(long, value_enum, default_value_t = FitMethod::Mm)]
    pub method: FitMethod,

    /// FDR level for `--method bh`.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[command(flatten)]
    pub ml: MlArgs,

    /// Report file; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DecideArgs {
    /// Report written by `fit`.
    #[arg(short, long, value_name = "FILE")]
    pub report: PathBuf,

    #[command(flatten)]
    pub decision: DecisionArgs,

    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// Number of items per replicate.
    #[arg(long, default_value_t = 1_000_000)]
    pub n_total: usize,

    /// True null proportions to sweep; defaults to 0, 0.05, 0.1, ..., 0.9, 0.95, 1.
    #[arg(long, value_delimiter = ',')]
    pub pi0: Vec<f64>,

    #[arg(long, default_value_t = 100)]
    pub replicates: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// LFDR cutoff for counting discoveries.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,

    /// Benjamini-Hochberg level.
    #[arg(long, default_value_t = 0.05)]
    pub bh_alpha: f64,

    /// Skip the Benjamini-Hochberg baseline.
    #[arg(long)]
    pub no_bh: bool,

    /// Also fit by maximum likelihood (needs `--d`).
    #[arg(long)]
    pub ml: bool,

    #[command(flatten)]
    pub bounds: MlArgs,

    /// Metrics CSV; stdout when omitted.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct Sim1Args {
    #[command(flatten)]
    pub scoring: ScoringArgs,

    #[arg(long = "or", default_value_t = 1.5)]
    pub odds_ratio: f64,

    /// Variance of the log odds-ratio estimate.
    #[arg(long, default_value_t = 0.01)]
    pub sigma2: f64,

    /// Draw each associated item's OR from N(--or, --or-sd^2).
    #[arg(long)]
    pub random_or: bool,

    #[arg(long, default_value_t = 0.1)]
    pub or_sd: f64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct Sim2Args {
    #[command(flatten)]
    pub scoring: ScoringArgs,

    #[arg(long, default_value_t = 60_000)]
    pub cases: u64,

    #[arg(long, default_value_t = 120_000)]
    pub controls: u64,

    /// Risk-allele frequency.
    #[arg(long, default_value_t = 0.2)]
    pub allele_freq: f64,

    /// Disease prevalence among non-carriers.
    #[arg(long, default_value_t = 0.01)]
    pub v0: f64,

    /// Odds ratio of the homozygous risk genotype.
    #[arg(long, default_value_t = 1.5)]
    pub or2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchMethod {
    Mm,
    Ml,
    Both,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BenchArgs {
    /// Statistics per run.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,

    #[arg(long, default_value_t = 0.9)]
    pub pi0: f64,

    #[arg(long, value_enum, default_value_t = BenchMethod::Mm)]
    pub method: BenchMethod,

    /// Timed runs per task; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[command(flatten)]
    pub ml: MlArgs,
}

const SUBCOMMANDS: [&str; 6] = [
    "fit",
    "decide",
    "convert",
    "simulate1",
    "simulate2",
    "bench",
];
const VALUED_GLOBALS: [&str; 2] = ["--threads", "--config"];

/// Splices the options from a `--config` file in right after the subcommand
/// name, so that options typed on the command line come later and win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(path.clone(), e))?;
    let mut injected = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{}:{}: expected key=value", path.display(), n + 1))
        })?;
        let (key, value) = (key.trim().trim_start_matches("--"), value.trim());
        match value {
            "true" => injected.push(format!("--{key}").into()),
            "false" => {}
            v => {
                injected.push(format!("--{key}").into());
                injected.push(v.into());
            }
        }
    }
    let at = subcommand_position(&args).map_or(args.len(), |i| i + 1);
    let mut out = args;
    out.splice(at..at, injected);
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if SUBCOMMANDS.contains(&a.as_ref()) {
            return Some(i);
        }
        i += if VALUED_GLOBALS.contains(&a.as_ref()) {
            2
        } else {
            1
        };
    }
    None
}
