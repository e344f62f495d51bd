//! `ample` — command-line front-end for the path loss toolkit.
//!
//! Subcommands: `fit`, `predict`, `evaluate`, `synth`, `heatmap`, `trace`.
//! Exit codes are a stable scripting contract: 0 success, 1 usage error,
//! 2 data error, 3 fit ran out of iterations before converging.

// `!(x > 0.0)` deliberately treats NaN like a violation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

macro_rules! data_error_from {
    ($($ty:ty),+ $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> CliError {
                CliError::Data(e.to_string())
            }
        })+
    };
}

data_error_from!(
    std::io::Error,
    ample_core::dataio::DatasetError,
    ample_core::regionmap::MapError,
    ample_core::regionmap::GeometryError,
    ample_core::models::ModelError,
    ample_core::models::presets::PresetError,
    ample_core::fitting::FitError,
    ample_core::metrics::MetricError,
    ample_core::metrics::DistError,
    ample_core::synth::SynthError,
);

#[derive(Parser)]
#[command(
    name = "ample",
    version,
    about = "Geometry-aware path loss models: fit, predict, evaluate, synthesize",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error, 3 fit did not converge."
)]
struct Cli {
    /// Log verbosity (-v info, -vv debug); diagnostics go to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract model parameters from a dataset by maximum likelihood.
    Fit(FitArgs),
    /// Apply a parameter preset to a dataset and write per-point predictions.
    Predict(PredictArgs),
    /// Score a parameter preset against a dataset (RMSE, MAE, AHRE, PMDE, timing).
    Evaluate(EvaluateArgs),
    /// Generate a procedural map and model-drawn dataset from a recipe.
    Synth(SynthArgs),
    /// Predict path loss on a grid of receivers and export it as a text grid.
    Heatmap(HeatmapArgs),
    /// Dump the traced line matrix of a single link, for debugging.
    Trace(TraceArgs),
}

/// Dataset filter knobs; unset values fall back to the config file, then to
/// the built-in defaults (150 dB cap, all distances, all frequencies, 5 m
/// bins, label-only binning).
#[derive(Args, Debug, Default)]
pub struct FilterFlags {
    /// Drop points with path loss above this many dB [default: 150].
    #[arg(long)]
    max_path_loss: Option<f64>,
    /// Drop points closer than this many meters (3D) [default: 0].
    #[arg(long)]
    min_distance: Option<f64>,
    /// Drop points farther than this many meters (3D) [default: unlimited].
    #[arg(long)]
    max_distance: Option<f64>,
    /// Distance bin width in meters [default: 5].
    #[arg(long)]
    distance_bin: Option<f64>,
    /// Keep only these carrier frequencies (GHz, comma-separated)
    /// [default: all].
    #[arg(long, value_delimiter = ',')]
    freqs: Option<Vec<f64>>,
    /// Average points within each (city, frequency, distance-bin) cell.
    #[arg(long)]
    bin_average: bool,
    /// Key-value config file; flags override it, it overrides defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Model family to fit: ample, ci or abg.
    #[arg(long)]
    model: String,
    /// Dataset CSV.
    #[arg(long)]
    dataset: PathBuf,
    /// Region map (required for ample; optional for ci/abg classification).
    #[arg(long)]
    map: Option<PathBuf>,
    /// Initial parameters preset; defaults to the built-in starting points.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Scenario label for the default ample init and the output preset.
    #[arg(long, default_value = "uma")]
    scenario: String,
    /// Environment label (los/nlos) for the default ample init.
    #[arg(long, default_value = "nlos")]
    environment: String,
    /// Keep only links of one class before fitting (requires a map).
    #[arg(long, value_parser = ["los", "nlos"])]
    env_filter: Option<String>,
    /// CI reference distance / line-matrix cut, in meters [default: 1].
    #[arg(long)]
    d0: Option<f64>,
    /// Gradient descent step size.
    #[arg(long, default_value_t = 2e-6)]
    step_size: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 2_000_000)]
    max_iters: u64,
    /// Stop when the gradient infinity norm falls below this.
    #[arg(long, default_value_t = 1e-4)]
    grad_tol: f64,
    /// Lower clamp for sigma during descent.
    #[arg(long, default_value_t = 1e-3)]
    sigma_floor: f64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    filter: FilterFlags,
}

#[derive(Args)]
struct PredictArgs {
    /// Parameter preset file.
    #[arg(long)]
    params: PathBuf,
    /// Dataset CSV.
    #[arg(long)]
    dataset: PathBuf,
    /// Region map (required for ample presets).
    #[arg(long)]
    map: Option<PathBuf>,
    /// CI cut for line tracing, in meters [default: 1].
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    filter: FilterFlags,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Parameter preset file.
    #[arg(long)]
    params: PathBuf,
    /// Dataset CSV.
    #[arg(long)]
    dataset: PathBuf,
    /// Region map (required for ample presets and LOS classification).
    #[arg(long)]
    map: Option<PathBuf>,
    /// Evaluate only links of one class; also picks that class's threshold range.
    #[arg(long, value_parser = ["los", "nlos"])]
    env: Option<String>,
    /// Threshold sweep start, dB (default: 80 LOS / 100 NLOS).
    #[arg(long)]
    thr_min: Option<f64>,
    /// Threshold sweep end, dB (default: 100 LOS / 120 NLOS).
    #[arg(long)]
    thr_max: Option<f64>,
    /// Threshold sweep step, dB.
    #[arg(long)]
    thr_step: Option<f64>,
    /// Measure mean simulation time per point over this many rounds.
    /// Timing is machine-dependent and lands in timing.dat, not the report.
    #[arg(long)]
    rounds: Option<u32>,
    /// CI cut for line tracing, in meters [default: 1].
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    filter: FilterFlags,
}

#[derive(Args)]
struct SynthArgs {
    /// Recipe file (map geometry, link lattice, generating model, seed).
    #[arg(long)]
    recipe: PathBuf,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct HeatmapArgs {
    /// Parameter preset file.
    #[arg(long)]
    params: PathBuf,
    /// Region map.
    #[arg(long)]
    map: PathBuf,
    /// Transmitter latitude, degrees.
    #[arg(long, allow_negative_numbers = true)]
    tx_lat: f64,
    /// Transmitter longitude, degrees.
    #[arg(long, allow_negative_numbers = true)]
    tx_lon: f64,
    /// Carrier frequency, GHz.
    #[arg(long)]
    freq: f64,
    /// Output grid pitch in meters (default: the map's cell size).
    #[arg(long)]
    resolution: Option<f64>,
    /// Transmitter height in meters (3D distance for ci/abg).
    #[arg(long, default_value_t = 30.0)]
    tx_height: f64,
    /// Receiver height in meters.
    #[arg(long, default_value_t = 1.5)]
    rx_height: f64,
    /// CI cut for line tracing, in meters.
    #[arg(long, default_value_t = 1.0)]
    d0: f64,
    /// Reference dataset; adds an absolute-error grid against it.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    /// Region map.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    tx_lat: f64,
    #[arg(long, allow_negative_numbers = true)]
    tx_lon: f64,
    #[arg(long, allow_negative_numbers = true)]
    rx_lat: f64,
    #[arg(long, allow_negative_numbers = true)]
    rx_lon: f64,
    /// CI cut in meters.
    #[arg(long, default_value_t = 1.0)]
    d0: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let outcome = match cli.command {
        Command::Fit(args) => commands::fit(args),
        Command::Predict(args) => commands::predict(args).map(|()| 0),
        Command::Evaluate(args) => commands::evaluate(args).map(|()| 0),
        Command::Synth(args) => commands::synth(args).map(|()| 0),
        Command::Heatmap(args) => commands::heatmap(args).map(|()| 0),
        Command::Trace(args) => commands::trace(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("usage error: {msg}"),
                CliError::Data(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
