//! `geovalid`: nearest-neighbour distance diagnostics, fold construction,
//! evaluation, area of applicability and the simulation experiment from
//! the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "geovalid",
    version,
    about = "Spatial validation diagnostics for map predictions"
)]
struct Cli {
    /// Cap on worker threads; defaults to all available cores.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nearest-neighbour distance samples (training, prediction, CV folds).
    Nnd(NndArgs),
    /// Wasserstein-1 distance between two samples, or the extrapolation
    /// index of a training set with respect to a prediction domain.
    Wasserstein(WassersteinArgs),
    /// Assign training points to cross-validation folds.
    Folds(FoldArgs),
    /// Estimate map error by cross-validation or from a random test sample.
    Evaluate(EvaluateArgs),
    /// Dissimilarity index and area of applicability for prediction points.
    Aoa(AoaArgs),
    /// Run the synthetic experiment described by a config file.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Geo,
    Predictor,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Random,
    Block,
    Knndm,
}

#[derive(Args, Clone)]
pub struct FoldOpts {
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Block side length in coordinate units (block strategy).
    #[arg(long)]
    pub block_size: Option<f64>,
    /// Largest cluster count tried by kNNDM.
    #[arg(long)]
    pub q_max: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct NndArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub predict: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::Geo)]
    pub metric: MetricArg,
    /// Comma-separated predictor weights (predictor metric only).
    #[arg(long)]
    pub weights: Option<String>,
    #[command(flatten)]
    pub folds: FoldOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct WassersteinArgs {
    /// First sample: one numeric column, or a column named `distance`.
    #[arg(long, requires = "b", conflicts_with_all = ["train", "predict"])]
    pub a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    pub b: Option<PathBuf>,
    #[arg(long, requires = "predict")]
    pub train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    pub predict: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::Geo)]
    pub metric: MetricArg,
    #[arg(long)]
    pub weights: Option<String>,
    /// With `--strategy`, also report the CV match index of those folds.
    #[command(flatten)]
    pub folds: FoldOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FoldArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Prediction domain (required by kNNDM).
    #[arg(long)]
    pub predict: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::Geo)]
    pub metric: MetricArg,
    #[arg(long)]
    pub weights: Option<String>,
    #[command(flatten)]
    pub folds: FoldOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Training points with a `response` column.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub predict: Option<PathBuf>,
    /// Simple random test sample with responses, for design-based evaluation.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Fully observed prediction domain, for true error and AOA restriction.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricArg::Geo)]
    pub metric: MetricArg,
    #[arg(long)]
    pub weights: Option<String>,
    #[command(flatten)]
    pub folds: FoldOpts,
    /// Learner settings as JSON (defaults: random forest, 100 trees).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct AoaArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub predict: PathBuf,
    #[arg(long)]
    pub weights: Option<String>,
    /// Normalise by the mean nearest-neighbour distance instead of the mean
    /// over all training pairs.
    #[arg(long)]
    pub mean_nn: bool,
    #[command(flatten)]
    pub folds: FoldOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `master_seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// An invalid combination of flags, reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEOVALID_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Nnd(a) => commands::nnd(a),
        Command::Wasserstein(a) => commands::wasserstein(a),
        Command::Folds(a) => commands::folds(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Aoa(a) => commands::aoa(a),
        Command::Simulate(a) => commands::simulate(a, cli.threads.map(|t| t as usize)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
