use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "selex",
    version,
    about = "Fit, simulate and evaluate SELEX binding-energy models"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Fit an energy matrix to a rounds file by maximum likelihood.
    Fit(FitArgs),
    /// Simulate a SELEX experiment from a truth matrix.
    Simulate(SimulateArgs),
    /// Best-site scores of sequences under a matrix.
    Score(ScoreArgs),
    /// Per-position scores (and optional hits) along a genome.
    Scan(ScanArgs),
    /// Enrichment profile of matrix hits around ChIP peaks.
    ChipEval(ChipEvalArgs),
    /// Exact small-k quantities for checking other tools.
    Oracle(OracleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Simulate(_) => "simulate",
            Command::Score(_) => "score",
            Command::Scan(_) => "scan",
            Command::ChipEval(_) => "chip-eval",
            Command::Oracle(_) => "oracle",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Fit(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Score(a) => &a.common,
            Command::Scan(a) => &a.common,
            Command::ChipEval(a) => &a.common,
            Command::Oracle(a) => &a.common,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// `key = value` file; every key mirrors a flag and explicit flags win.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Primary output file.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Run manifest path [default: <out>.manifest.json].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    /// Rounds file: sequence<TAB>count<TAB>round per line.
    #[arg(long)]
    pub rounds: PathBuf,
    #[arg(long)]
    pub site_len: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// Best restarts to re-run from their end points until they stop improving.
    #[arg(long, default_value_t = 3)]
    pub refine: usize,
    #[arg(long, default_value_t = 20)]
    pub refine_passes: usize,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    /// Fixed per-round log concentrations (comma-separated); fitted if omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub log_tf: Option<Vec<f64>>,
    #[arg(long)]
    pub fit_junk: bool,
    /// Junk-binding constant (held fixed unless --fit-junk).
    #[arg(long, default_value_t = 0.0)]
    pub c_junk: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub f_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub x_tol: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub initial_step: f64,
    /// Also write the fitted matrix on its own.
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    /// Truth matrix file.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Per-round log concentrations (comma-separated); sets the round count.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub log_tf: Vec<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub pool_size: u64,
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    #[arg(long, default_value_t = 2000)]
    pub sample: u64,
    #[arg(long, default_value_t = 0.0)]
    pub c_junk: f64,
    /// Copy of the truth matrix for refit studies.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// One sequence per line.
    #[arg(long)]
    pub sequences: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub genome: PathBuf,
    /// Mark positions scoring strictly above this value.
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct ChipEvalArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub genome: PathBuf,
    /// contig<TAB>position<TAB>score per line, positions 0-based.
    #[arg(long)]
    pub peaks: PathBuf,
    /// contig<TAB>start<TAB>end<TAB>label per line.
    #[arg(long)]
    pub exclusions: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub n_peaks: usize,
    #[arg(long, default_value_t = 4000)]
    pub half_window: usize,
    #[arg(long, default_value_t = 100)]
    pub n_background: usize,
    #[arg(long, default_value_t = 0.999)]
    pub alpha: f64,
    #[arg(long, default_value_t = 201)]
    pub smoothing: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub k: usize,
    /// With --log-tf, also report exact normalizing sums for this matrix.
    #[arg(long, requires = "log_tf")]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub log_tf: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    pub c_junk: f64,
    #[command(flatten)]
    pub common: Common,
}
