//! Command-line harness: treatment runs, run comparison, lag studies, and
//! parallel sweeps.
//!
//! Exit codes are stable: 0 success, 2 configuration error, 3 I/O error,
//! 4 run mismatch, 5 domain error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curricsim::Error;

mod commands;

#[derive(Parser)]
#[command(
    name = "curricsim",
    version,
    about = "Learning-progress curriculum simulator and estimator studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one treatment run from a JSON config and write its artifacts.
    Run(RunArgs),
    /// Compare two or more finished runs over the same task graph.
    Compare(CompareArgs),
    /// Study the slope estimator's error as a function of the lag.
    Dtopt(DtoptArgs),
    /// Run a grid of (treatment, seed) jobs in parallel.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run config (or a manifest.json from a previous run).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's number of rounds.
    #[arg(long)]
    rounds: Option<u64>,
    /// Replace the config's treatment with a named one
    /// (uniform-off, uniform-fixed, uniform-dynamic,
    /// lp-bidirectional-dynamic, lp-unidirectional-dynamic).
    #[arg(long)]
    treatment: Option<String>,
    /// Output root; defaults to $CURRICSIM_OUT or ./runs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run name (directory under the output root); defaults to the config
    /// file stem, or the treatment name when --treatment is given.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directories of finished runs (each containing manifest.json).
    #[arg(required = true, num_args = 2..)]
    run_dirs: Vec<PathBuf>,
    /// Output directory; defaults to $CURRICSIM_OUT/compare or ./compare.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DtoptArgs {
    /// Samples per snapshot.
    #[arg(long, default_value_t = 200)]
    n: u64,
    /// Monte Carlo trials per grid point.
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Lag grid as DECADES:POINTS_PER_DECADE, centered on the optimal lag.
    #[arg(long, default_value = "2:25")]
    grid: String,
    /// Master seed for the Monte Carlo streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Curve family: logistic or linear.
    #[arg(long, default_value = "logistic")]
    curve: String,
    /// Logistic midpoint.
    #[arg(long, default_value_t = 5000.0)]
    midpoint: f64,
    /// Logistic scale.
    #[arg(long, default_value_t = 400.0)]
    scale: f64,
    /// Linear intercept.
    #[arg(long, default_value_t = 0.1)]
    intercept: f64,
    /// Linear slope.
    #[arg(long, default_value_t = 0.00005)]
    slope: f64,
    /// Domain start.
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    /// Domain end.
    #[arg(long, default_value_t = 10000.0)]
    t1: f64,
    /// Success level at which the slope is estimated (logistic curves).
    #[arg(long, default_value_t = curricsim::estimator::DEFAULT_EVAL_LEVEL)]
    eval_level: f64,
    /// Explicit evaluation time (overrides --eval-level; required for linear).
    #[arg(long)]
    eval_time: Option<f64>,
    /// Print the closed-form optimal lag only, skipping the Monte Carlo sweep.
    #[arg(long)]
    closed_form: bool,
    /// Output directory; defaults to $CURRICSIM_OUT/dtopt or ./dtopt.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON run config providing the task graph and parameters.
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated seeds, e.g. 1,2,3.
    #[arg(long, default_value = "0")]
    seeds: String,
    /// Comma-separated named treatments; defaults to all five.
    #[arg(long)]
    treatments: Option<String>,
    /// Override the config's number of rounds.
    #[arg(long)]
    rounds: Option<u64>,
    /// Worker threads.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    /// Output root; defaults to $CURRICSIM_OUT/sweep or ./sweep.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Json(_) => 2,
        Error::Io(_) | Error::Csv(_) => 3,
        Error::Mismatch(_) => 4,
        Error::Domain(_)
        | Error::NoOptimum(_)
        | Error::Contract(_)
        | Error::UnknownTask { .. } => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Compare(args) => commands::compare(args),
        Command::Dtopt(args) => commands::dtopt(args),
        Command::Sweep(args) => commands::sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
