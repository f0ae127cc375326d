//! `vfm` — generate synthetic datasets, train forecasting models, produce
//! stitched forecasts, and run the gauge-count convergence study.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error. Every command
//! is reproducible: identical flags and seed give identical output bytes
//! (pass --no-timestamps to zero wall-time columns in logs).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "vfm",
    version,
    about = "Multiphase rate forecasting from pressure/temperature series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit synthetic datasets as CSV.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Build sequence windows, train a model, write checkpoint + history.
    Train(TrainArgs),
    /// Load a checkpoint and produce stitched forecasts, metrics and plot data.
    Forecast(ForecastArgs),
    /// Train once per gauge set and tabulate test errors.
    Convergence(ConvergenceArgs),
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Severe-slugging pressure/rate signals.
    Slugging(GenSluggingArgs),
    /// Five-period variable-rate well test fixture.
    Welltest(GenWelltestArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; flags override it.
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Zero wall-time columns so outputs are byte-reproducible.
    #[arg(long)]
    no_timestamps: bool,
}

#[derive(Args)]
struct GenSluggingArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Signal duration, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Sampling step, seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Number of pressure gauges.
    #[arg(long)]
    gauges: Option<usize>,
    /// Slug cycle period, seconds.
    #[arg(long)]
    period: Option<f64>,
    /// Buildup fraction of the cycle.
    #[arg(long)]
    duty: Option<f64>,
    /// Relative noise level.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct GenWelltestArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Relative noise level.
    #[arg(long)]
    noise: Option<f64>,
    /// Five comma-separated flow-period lengths, samples.
    #[arg(long)]
    periods: Option<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input frame CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Treat the data file as a raw well-test CSV (irregular timestamps
    /// allowed; per-period resampling at --resample-dt).
    #[arg(long)]
    well_test: bool,
    /// Resampling step for --well-test input, seconds.
    #[arg(long)]
    resample_dt: Option<f64>,
    /// Comma-separated input channel names.
    #[arg(long)]
    inputs: Option<String>,
    /// Comma-separated output channel names.
    #[arg(long)]
    outputs: Option<String>,
    /// Input sequence length, samples.
    #[arg(long)]
    l_in: Option<usize>,
    /// Output sequence length, samples.
    #[arg(long)]
    l_out: Option<usize>,
    /// Indentation step between training sequences, samples.
    #[arg(long)]
    step: Option<usize>,
    /// Training interval length, samples (default: the whole file).
    #[arg(long)]
    train_len: Option<usize>,
    /// Model family: lstm or ff.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated hidden layer sizes.
    #[arg(long)]
    hidden: Option<String>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Validation fraction (tail split).
    #[arg(long)]
    val_split: Option<f64>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Frame CSV supplying the model inputs (and truth when it also holds
    /// the output channels).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Separate truth frame CSV for metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// overlapping or nonoverlapping output sequences.
    #[arg(long)]
    mode: Option<String>,
    /// Shift between sequence starts, samples.
    #[arg(long)]
    shift: Option<usize>,
    /// Leading outputs of each sequence to discard when stitching.
    #[arg(long)]
    warmup: Option<usize>,
    /// First sequence start, sample index.
    #[arg(long)]
    first_start: Option<usize>,
    /// Forecast horizon end, sample index (default: frame length).
    #[arg(long)]
    end: Option<usize>,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Ordered gauge channels; row k of the study trains on the first k+1.
    #[arg(long)]
    gauges: Option<String>,
    /// Explicit gauge sets, semicolon-separated (e.g. "p1;p1,p2"); overrides
    /// the prefix sets built from --gauges.
    #[arg(long)]
    gauge_sets: Option<String>,
    /// Comma-separated output channel names.
    #[arg(long)]
    outputs: Option<String>,
    #[arg(long)]
    l_in: Option<usize>,
    #[arg(long)]
    l_out: Option<usize>,
    #[arg(long)]
    step: Option<usize>,
    #[arg(long)]
    train_len: Option<usize>,
    #[arg(long)]
    hidden: Option<String>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Validation fraction (tail split).
    #[arg(long)]
    val_split: Option<f64>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Forecast-sequence shift on the test interval, samples.
    #[arg(long)]
    shift: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Run study rows on separate threads.
    #[arg(long)]
    parallel: bool,
}

/// Runtime failures exit 1; usage problems (missing required values after
/// merging flags and config) exit 2.
enum AppError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for AppError {
    fn from(e: E) -> Self {
        AppError::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { kind } => match kind {
            GenerateKind::Slugging(args) => commands::generate_slugging(args),
            GenerateKind::Welltest(args) => commands::generate_welltest(args),
        },
        Command::Train(args) => commands::train(args),
        Command::Forecast(args) => commands::forecast(args),
        Command::Convergence(args) => commands::convergence(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            eprintln!("run `vfm <command> --help` for the flag list");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
