//! `ock`: generate datasets, learn vector fields with occupation kernels,
//! predict and score trajectories, and run the PDE refinement study.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod generate;
mod pde_study;
mod predict;
mod table;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "ock", version, about = "Occupation kernel learning of ODE and PDE dynamics")]
struct Cli {
    /// Log progress to stderr (repeat for more detail). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a synthetic dataset and write it as CSV with a metadata sidecar.
    Generate(GenerateArgs),
    /// Split, grid-search, refit and test; writes the model and a report.
    Train(ExperimentArgs),
    /// Integrate a model from initial conditions.
    Predict(PredictArgs),
    /// Score predicted trajectories against the truth.
    Evaluate(EvaluateArgs),
    /// Fit the PDE test case on refining grids and report error slopes.
    PdeStudy(PdeStudyArgs),
    /// Run only the hyperparameter grid search and write its report.
    Tune(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Start from the dataset of a named preset.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON generator config merged over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// fhn, lorenz63 or lorenz96.
    #[arg(long)]
    pub system: Option<String>,
    /// State dimension (Lorenz96 only, at least 4).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub snapshots: Option<usize>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Standard deviation of additive Gaussian observation noise.
    #[arg(long)]
    pub noise: Option<f64>,
    /// RK4 substeps per sampling interval.
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Dataset CSV; metadata goes to the same stem with `.meta.json`.
    #[arg(long, short, default_value = "data.csv")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// fhn-desk, lorenz63-desk, lorenz96-16-desk or lorenz96-128-desk.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON experiment config merged over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Train on a snapshot CSV instead of generated data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// gaussian or rff.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Random feature count for the rff kernel.
    #[arg(long)]
    pub features: Option<usize>,
    /// Seed of the random feature draw.
    #[arg(long)]
    pub kernel_seed: Option<u64>,
    /// implicit (segment Gram) or explicit (feature-space) solve.
    #[arg(long)]
    pub path: Option<String>,
    /// Comma-separated ridge parameters to search.
    #[arg(long)]
    pub lambdas: Option<String>,
    /// Comma-separated lengthscales to search.
    #[arg(long)]
    pub lengthscales: Option<String>,
    /// Read lengthscales as multiples of the median state distance.
    #[arg(long, value_name = "BOOL")]
    pub relative_lengthscales: Option<bool>,
    /// Fit in per-coordinate standardized units.
    #[arg(long, value_name = "BOOL")]
    pub standardize: Option<bool>,
    /// Train,validation,test fractions by trajectory.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// RK4 substeps per interval when scoring predictions.
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of `series_id,x_1..x_d`, or a snapshot CSV whose first state per
    /// series is used.
    #[arg(long)]
    pub initial: PathBuf,
    /// Explicit comma-separated output times.
    #[arg(long, conflicts_with_all = ["t_start", "t_end", "n_times"])]
    pub times: Option<String>,
    #[arg(long)]
    pub t_start: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Number of evenly spaced output times including both ends.
    #[arg(long)]
    pub n_times: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub substeps: usize,
    #[arg(long, short, default_value = "predictions.csv")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Snapshot CSV of true trajectories.
    #[arg(long)]
    pub truth: PathBuf,
    /// Prediction CSV written by `predict`.
    #[arg(long)]
    pub pred: PathBuf,
    /// Model used for the one-step error; without it that column is empty.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub substeps: usize,
    #[arg(long, default_value = "evaluation")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PdeStudyArgs {
    #[arg(long, default_value = "pde-desk")]
    pub preset: String,
    /// JSON study config merged over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated grid sizes, e.g. `100x10,200x20`.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub features_alpha: Option<usize>,
    #[arg(long)]
    pub features_f: Option<usize>,
    #[arg(long)]
    pub lengthscale_alpha: Option<f64>,
    #[arg(long)]
    pub lengthscale_f: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => generate::run(&a),
        Command::Train(a) => train::run_train(&a),
        Command::Tune(a) => train::run_tune(&a),
        Command::Predict(a) => predict::run_predict(&a),
        Command::Evaluate(a) => predict::run_evaluate(&a),
        Command::PdeStudy(a) => pde_study::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
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
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
