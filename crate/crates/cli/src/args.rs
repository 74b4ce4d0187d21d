use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use wavemoments::wv::EstimatorKind;

pub const DEFAULT_SEED: u64 = 1337;

#[derive(Debug, Parser)]
#[command(name = "wavemoments", version, about = "Generalized method of wavelet moments")]
pub struct Cli {
    /// Worker threads for the parallel stages (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a model and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate the wavelet variance of a series.
    Wvar(WvarArgs),
    /// Overlay the wavelet variances of several series or estimators.
    Compare(CompareArgs),
    /// Fit a model by GMWM.
    Fit(FitArgs),
    /// Rank candidate models by the wavelet information criterion.
    Rank(RankArgs),
    /// Bootstrap goodness-of-fit test of a fitted model.
    Gof(GofArgs),
    /// Time the wavelet variance estimators.
    Bench(BenchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Wvar(_) => "wvar",
            Command::Compare(_) => "compare",
            Command::Fit(_) => "fit",
            Command::Rank(_) => "rank",
            Command::Gof(_) => "gof",
            Command::Bench(_) => "bench",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeedArg {
    /// Master seed; WAVEMOMENTS_SEED overrides the default.
    #[arg(long, env = "WAVEMOMENTS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV file, `-` for stdin, or `fixture:nile` for the bundled series.
    pub input: String,
    /// Column to read: header name or 1-based index (default: first).
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimatorArgs {
    /// Use the robust (Tukey biweight) wavelet variance.
    #[arg(long)]
    pub robust: bool,
    /// Gaussian efficiency of the robust estimator.
    #[arg(long, default_value_t = 0.6)]
    pub eff: f64,
    /// Significance level of the confidence intervals.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of scales (default: floor(log2 T)).
    #[arg(long)]
    pub levels: Option<usize>,
}

impl EstimatorArgs {
    pub fn kind(&self) -> EstimatorKind {
        if self.robust {
            EstimatorKind::Robust { eff: self.eff }
        } else {
            EstimatorKind::Classical
        }
    }
}

/// Output destinations; kept out of the recorded config so the JSON does
/// not depend on where it is written.
#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long)]
    #[serde(skip)]
    pub out_json: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out_svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Model grammar, e.g. "AR1(phi=0.9,sigma2=1)+WN(sigma2=2)".
    #[arg(long)]
    pub model: String,
    #[arg(short = 'n')]
    pub n: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
    /// Write one column per component plus the total.
    #[arg(long)]
    pub latent: bool,
    /// Output CSV (default: stdout).
    #[arg(long, short = 'o')]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WvarArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    /// Input series; a single input is compared classical against robust.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    #[arg(long)]
    pub column: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    /// Bootstrap replicates for standard errors and intervals.
    #[arg(short = 'B', default_value_t = 100)]
    #[serde(rename = "B")]
    pub b: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
    /// Also run the bootstrap goodness-of-fit test.
    #[arg(long)]
    pub gof: bool,
    /// Plot the implied WV of each term.
    #[arg(long)]
    pub decomp: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Candidate model; repeat for each candidate.
    #[arg(long, required = true)]
    pub model: Vec<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(short = 'B', default_value_t = 100)]
    #[serde(rename = "B")]
    pub b: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    #[serde(skip)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GofArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub model: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(short = 'B', default_value_t = 100)]
    #[serde(rename = "B")]
    pub b: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    #[serde(skip)]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    /// Series lengths.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000,100000,1000000")]
    pub sizes: Vec<usize>,
    /// Timed runs per size; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Also time the robust estimator.
    #[arg(long)]
    pub robust: bool,
    #[arg(long, default_value_t = 0.6)]
    pub eff: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    #[serde(skip)]
    pub out_json: Option<PathBuf>,
}
