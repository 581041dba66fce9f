use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trace_ratio::multiview::{ModelFamily, UpdateMode};

#[derive(Debug, Parser)]
#[command(name = "trace-ratio", version, about = "θ-trace-ratio optimization on the Stiefel manifold")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random problem files, one per (n, k, seed).
    Synth(SynthArgs),
    /// Generate a labelled multi-view Gaussian dataset directory.
    SynthViews(SynthViewsArgs),
    /// Run the SCF solver and write trajectory and summary CSVs.
    Solve(SolveArgs),
    /// Fit multi-view projections on a whole dataset.
    MvslFit(FitArgs),
    /// Repeated-split 1-NN evaluation over a (k, θ) grid.
    MvslEval(EvalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Synth(_) => "synth",
            Self::SynthViews(_) => "synth-views",
            Self::Solve(_) => "solve",
            Self::MvslFit(_) => "mvsl-fit",
            Self::MvslEval(_) => "mvsl-eval",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    /// Exponent stored in the problem file.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub spd_shift: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SynthViewsArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub m: usize,
    #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    /// Distance between class means, in units of the noise scale.
    #[arg(long, default_value_t = 5.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Spectral,
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// First k columns of the identity.
    Identity,
    /// Orthonormalized Gaussian matrix drawn from --seed.
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Problem files; without any, a problem is generated from --n, --k, --seed.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One run per value; overrides the exponent stored in the problem.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub rank_tol: f64,
    #[arg(long, value_enum, default_value_t = NormArg::Spectral)]
    pub residual_norm: NormArg,
    /// Exponent used while bootstrapping to a nonnegative numerator (0 or 1).
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub bootstrap_theta: u8,
    #[arg(long, value_enum, default_value_t = InitArg::Identity)]
    pub init: InitArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AlternateArgs {
    #[arg(long, default_value = "gauss-seidel")]
    pub mode: UpdateMode,
    /// Relative stopping tolerance on the sweep objective.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 50)]
    pub max_sweeps: usize,
    #[arg(long, default_value_t = 50)]
    pub inner_max_iter: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub diag_regularization: f64,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "gma")]
    pub model: ModelFamily,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Recorded in the output headers only; fitting is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub alternate: AlternateArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "gma")]
    pub model: Vec<ModelFamily>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub k: Vec<usize>,
    /// Defaults to 0, 0.1, …, 1.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub alternate: AlternateArgs,
    #[arg(long)]
    pub out: PathBuf,
}
