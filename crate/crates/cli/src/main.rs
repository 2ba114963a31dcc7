//! `rfa`: receptive-field analysis of convolutional architectures from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 the model could not be read or
//! is invalid, 3 the model is not fully utilized (`check`) or no acceptable
//! refinement exists (`refine`). Diagnostics go to standard error, data to
//! standard output or `--out`.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rfa_core::geometry::Dims;

use commands::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "rfa",
    version,
    about = "Receptive-field analysis for CNN architectures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flag unproductive and underutilized layers at an input resolution.
    Analyze(AnalyzeArgs),
    /// Print the minimal input resolution the architecture fully utilizes.
    Imin(ModelArg),
    /// Exit 0 if the model is fully utilized at the resolution, 3 otherwise.
    Check(CheckArgs),
    /// Propose stride reductions or block pruning that fix underutilization.
    Refine(RefineArgs),
    /// Translate a model into another description format.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Architecture file (`.rfa` description or `.onnx` model).
    model: PathBuf,
}

#[derive(Debug, Args)]
struct ResolutionArg {
    /// Input resolution as HxW (or a single side); defaults to the model's
    /// declared design resolution.
    #[arg(long, value_name = "HxW", value_parser = parse_resolution)]
    input_res: Option<Dims>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output format; inferred from the `--out` extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    resolution: ResolutionArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    resolution: ResolutionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    /// Set the strides of a few downsampling layers to 1.
    Stride,
    /// Remove wasted building blocks and widen the remaining layers.
    Prune,
}

#[derive(Debug, Args)]
struct RefineArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    resolution: ResolutionArg,
    #[arg(long, value_enum)]
    strategy: Strategy,
    /// Largest number of strides changed by one proposal.
    #[arg(long, value_name = "N", default_value_t = 2)]
    max_changes: usize,
    /// Allowed relative parameter change when pruning.
    #[arg(long, value_name = "F", default_value_t = 0.02)]
    tolerance: f64,
    /// Widened channel counts are multiples of this.
    #[arg(long, value_name = "N", default_value_t = 1)]
    quantum: u64,
    /// Comma-separated layers to widen when pruning (default: every
    /// ungrouped convolution before the first removed layer).
    #[arg(long, value_name = "IDS", value_delimiter = ',')]
    widen: Option<Vec<String>>,
    /// Write the best proposal, applied, as an `.rfa` description.
    #[arg(long, value_name = "FILE")]
    emit_dsl: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Dsl,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Target format.
    #[arg(long, value_enum)]
    to: Target,
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

fn parse_resolution(s: &str) -> Result<Dims, String> {
    let dims: Dims = s.parse().map_err(|e| format!("{e}"))?;
    if dims.all(|x| x >= 1) {
        Ok(dims)
    } else {
        Err(format!("resolution {dims} must be at least 1x1"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Imin(a) => commands::imin(a),
        Command::Check(a) => commands::check(a),
        Command::Refine(a) => commands::refine(a),
        Command::Convert(a) => commands::convert(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rfa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
