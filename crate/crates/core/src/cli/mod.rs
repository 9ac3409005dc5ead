//! The `volembed` command-line front end.
//!
//! Exit codes: `0` success, `1` a verification check failed, `2` usage,
//! parse or I/O error, `3` degenerate input.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::distortion::{
    SubsetMode, SubsetStrategy, DEFAULT_ENUMERATION_CAP, DEFAULT_SAMPLE_COUNT,
};

mod commands;
pub mod io;

/// Environment variable supplying the default `--seed`.
pub const SEED_ENV: &str = "VOLEMBED_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(crate::Error::Degenerate(_)) => EXIT_DEGENERATE,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "volembed",
    version,
    about = "Random Gaussian embeddings that approximately preserve the volumes of small subsets",
    long_about = "Random Gaussian embeddings that approximately preserve the volumes of small subsets.\n\n\
                  Point sets are CSV files with one point per row; lines starting with '#' are ignored. \
                  Reports are JSON with floats printed to 17 significant digits. \
                  All logarithms are natural logarithms.\n\n\
                  Exit codes: 0 success, 1 verification failure, 2 usage/parse/I/O error, 3 degenerate input."
)]
pub struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Omit the timestamp so that repeated runs give byte-identical output.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Worker threads; 0 uses one per core. Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic point set.
    Gen(GenArgs),
    /// Embed a point set with a random Gaussian map and report its distortion.
    Embed(EmbedArgs),
    /// Measure the distortion between a point set and given images of it.
    Report(ReportArgs),
    /// Search certified contraction/expansion thresholds.
    Bounds(BoundsArgs),
    /// Run a Monte Carlo or exact-oracle verification suite.
    Verify {
        #[command(subcommand)]
        target: VerifyTarget,
    },
    /// Sweep embeddings over a grid of (n, d) and write CSV rows.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenMode {
    /// Independent standard normal coordinates.
    Gaussian,
    /// The origin and scaled unit vectors.
    Simplex,
    /// Uniform points on a sphere of radius `scale`.
    Sphere,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenMode::Gaussian)]
    pub mode: GenMode,
    /// Number of points.
    #[arg(long)]
    pub n: usize,
    /// Ambient dimension.
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Output CSV; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Args)]
pub struct StrategyArgs {
    /// Evaluate every subset (falling back to sampling above the cap) or a sample.
    #[arg(long, value_enum, default_value_t = StrategyMode::Exhaustive)]
    pub strategy: StrategyMode,
    /// Subsets drawn per size when sampling.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_COUNT)]
    pub samples: usize,
    /// Largest total subset count enumerated exhaustively.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enumeration_cap: u64,
}

impl StrategyArgs {
    pub fn strategy(&self) -> SubsetStrategy {
        SubsetStrategy {
            mode: match self.strategy {
                StrategyMode::Exhaustive => SubsetMode::Exhaustive,
                StrategyMode::Sampled => SubsetMode::Sampled,
            },
            sample_count: self.samples,
            enumeration_cap: self.enumeration_cap,
        }
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Input point-set CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Target dimension.
    #[arg(long)]
    pub d: usize,
    /// Largest simplex dimension; subsets of up to k + 1 points are measured.
    #[arg(long)]
    pub k: usize,
    /// Maximum number of random maps tried.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Stop at the first map with at most this distortion.
    #[arg(long)]
    pub target: Option<f64>,
    #[command(flatten)]
    pub subsets: StrategyArgs,
    /// Output CSV of embedded points.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Output JSON report; standard output when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Output CSV of the rescaled map, one row per target coordinate.
    #[arg(long)]
    pub map_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Source point-set CSV.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Images of the source points, row for row.
    #[arg(long, short)]
    pub embedded: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub subsets: StrategyArgs,
    /// Output JSON report; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub d: u32,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Share of the failure budget given to contraction.
    #[arg(long, default_value_t = crate::bounds::DEFAULT_SPLIT)]
    pub split: f64,
}

#[derive(Debug, Subcommand)]
pub enum VerifyTarget {
    /// Laws of volume ratios do not depend on the point set.
    Stability(StabilityArgs),
    /// The chi-square sandwich of the scaled geometric mean.
    Gordon(GordonArgs),
    /// Closed-form gamma and tail bounds against exact values.
    GammaBounds,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 9)]
    pub d: usize,
    #[arg(long, default_value_t = 4)]
    pub subset_size: usize,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Largest KS statistic accepted.
    #[arg(long, default_value_t = 0.02)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct GordonArgs {
    #[arg(long, default_value_t = 10)]
    pub d: u32,
    #[arg(long, default_value_t = 4)]
    pub s: u32,
    #[arg(long, default_value_t = 100_000)]
    pub reps: usize,
    /// Largest CDF ordering violation accepted.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Point counts, comma-separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub n_values: Vec<usize>,
    /// Target dimensions, comma-separated.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub d_values: Vec<usize>,
    /// Largest simplex dimension; floor(d/2) when absent.
    #[arg(long)]
    pub k: Option<usize>,
    /// Ambient dimension of the generated point clouds.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[command(flatten)]
    pub subsets: StrategyArgs,
    /// Output CSV.
    #[arg(long, short)]
    pub output: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = if cli.workers > 0 {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build()
        {
            Ok(pool) => pool.install(|| commands::dispatch(&cli)),
            Err(e) => Err(CliError::Usage(format!(
                "cannot start {} workers: {e}",
                cli.workers
            ))),
        }
    } else {
        commands::dispatch(&cli)
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
