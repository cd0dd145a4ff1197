//! The `hwnas` command-line surface.
//!
//! Subcommands: `gen-synthetic` (benchmark generation), `train-predictor`
//! (unary/binary predictor fitting + metrics), `search` (brp / ae /
//! ae-cached / random), and `analyze` (oracle, pareto, errorbound,
//! relation). Every command writes a `manifest.json` capturing the resolved
//! configuration, seeds and input digests.
//!
//! Exit codes: 0 success, 2 config/usage error, 3 infeasible or degenerate
//! input, 1 unexpected failure.

mod commands;
mod manifest;

pub use manifest::{file_digest, RunManifest};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("io error: {e}"))
    }
}

impl From<crate::bench::BenchError> for CliError {
    fn from(e: crate::bench::BenchError) -> Self {
        use crate::bench::BenchError;
        match e {
            BenchError::Schema { .. } | BenchError::Invalid(_) => {
                CliError::Infeasible(e.to_string())
            }
            BenchError::UnknownArch(_) | BenchError::UnknownDevice(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<crate::space::SpaceError> for CliError {
    fn from(e: crate::space::SpaceError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<crate::gcn::GcnError> for CliError {
    fn from(e: crate::gcn::GcnError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<crate::predictors::PredictorError> for CliError {
    fn from(e: crate::predictors::PredictorError) -> Self {
        use crate::predictors::PredictorError;
        match e {
            PredictorError::DegenerateCalibration(_) => CliError::Infeasible(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<crate::search::SearchError> for CliError {
    fn from(e: crate::search::SearchError) -> Self {
        use crate::search::SearchError;
        match e {
            SearchError::Config(_) => CliError::Usage(e.to_string()),
            SearchError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            SearchError::Bench(b) => b.into(),
            SearchError::Predictor(p) => p.into(),
            SearchError::Gcn(g) => g.into(),
        }
    }
}

impl From<crate::analysis::AnalysisError> for CliError {
    fn from(e: crate::analysis::AnalysisError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "hwnas", version, about = "Hardware-aware NAS experimentation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a deterministic synthetic benchmark table.
    GenSynthetic(GenSyntheticArgs),
    /// Train a latency/accuracy/binary predictor and emit metrics.
    TrainPredictor(TrainPredictorArgs),
    /// Run a search algorithm, emitting event logs and trajectories.
    Search(SearchArgs),
    /// Analysis reports over tables and predictors.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args, serde::Serialize)]
struct GenSyntheticArgs {
    /// Search space.
    #[arg(long, value_parser = ["nb201", "nb101"], default_value = "nb201")]
    space: String,
    /// Master RNG seed.
    #[arg(long, default_value_t = 2020)]
    seed: u64,
    /// Std-dev (%) of per-pseudo-seed accuracy noise.
    #[arg(long, default_value_t = 0.3)]
    noise_sd: f64,
    /// Full generator spec as JSON (overrides --seed/--noise-sd).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// NB-101 cell list (JSON), required for --space nb101.
    #[arg(long)]
    cells: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, serde::Serialize)]
struct TrainPredictorArgs {
    /// Predictor kind.
    #[arg(long, value_parser = ["latency", "accuracy", "binary"])]
    kind: String,
    /// Benchmark table CSV.
    #[arg(long)]
    table: PathBuf,
    /// NB-101 cell list (JSON), required for NB-101 tables.
    #[arg(long)]
    cells: Option<PathBuf>,
    /// Device name (required for latency predictors).
    #[arg(long)]
    device: Option<String>,
    /// Unary checkpoint whose trunk initializes this predictor.
    #[arg(long)]
    transfer_from: Option<PathBuf>,
    /// Training-set size (models). Defaults: 900 latency, 100 accuracy/binary.
    #[arg(long)]
    train_size: Option<usize>,
    /// Validation-set size (models).
    #[arg(long, default_value_t = 100)]
    val_size: usize,
    /// Override the epoch budget.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Hidden widths of the GCN trunk.
    #[arg(long, value_delimiter = ',', default_values_t = vec![600, 600, 600, 600])]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent trials (fresh split + init per trial).
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, serde::Serialize)]
struct SearchArgs {
    /// Search algorithm.
    #[arg(long, value_parser = ["brp", "ae", "ae-cached", "random"])]
    algo: String,
    #[arg(long)]
    table: PathBuf,
    /// NB-101 cell list (JSON), required for NB-101 tables.
    #[arg(long)]
    cells: Option<PathBuf>,
    /// Predictor-training budget K (models).
    #[arg(long = "K", default_value_t = 100)]
    budget_k: usize,
    /// Iterations I of the data-selection loop.
    #[arg(long = "I", default_value_t = 5)]
    iterations: usize,
    /// Exploitation fraction α.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Overall trained-model budget M.
    #[arg(long = "M", default_value_t = 140)]
    total_m: usize,
    /// Measured-latency constraint (ms) on --device.
    #[arg(long)]
    latency_limit: Option<f64>,
    #[arg(long)]
    device: Option<String>,
    /// Latency-predictor checkpoint used to filter candidates.
    #[arg(long)]
    latency_ckpt: Option<PathBuf>,
    /// Use measured latency as the candidate filter (oracle predictor).
    #[arg(long, default_value_t = false)]
    latency_oracle: bool,
    /// Unary checkpoint whose trunk initializes the relation predictor.
    #[arg(long)]
    transfer_from: Option<PathBuf>,
    /// Epoch budget of the relation predictor per iteration.
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden widths of the relation predictor trunk.
    #[arg(long, value_delimiter = ',', default_values_t = vec![600, 600, 600, 600])]
    hidden: Vec<usize>,
    /// Accuracy querying: fixed-seed or random-seed.
    #[arg(long, value_parser = ["fixed-seed", "random-seed"], default_value = "fixed-seed")]
    accuracy_mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent seeded runs.
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, serde::Serialize)]
struct AnalyzeArgs {
    #[command(subcommand)]
    report: AnalyzeCommand,
}

#[derive(Debug, Subcommand, serde::Serialize)]
enum AnalyzeCommand {
    /// Oracle-search error accounting over a threshold sweep.
    Oracle(OracleArgs),
    /// Pareto fronts in measured and predicted space.
    Pareto(ParetoArgs),
    /// Error-bound fractions of a unary predictor.
    Errorbound(ErrorboundArgs),
    /// Antisymmetry and cycle diagnostics of a binary predictor.
    Relation(RelationArgs),
}

#[derive(Debug, Args, serde::Serialize)]
struct PredictionSource {
    /// Unary latency checkpoint.
    #[arg(long)]
    ckpt: Option<PathBuf>,
    /// Use measured latency as the prediction (perfect predictor).
    #[arg(long, default_value_t = false)]
    identity: bool,
    /// Calibrated layer-wise baseline (synthetic tables only, or with
    /// --op-costs).
    #[arg(long, default_value_t = false)]
    layerwise: bool,
    /// Per-op microbenchmark costs CSV (op_name, device, cost_ms).
    #[arg(long)]
    op_costs: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
struct OracleArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    device: String,
    #[command(flatten)]
    source: PredictionSource,
    /// Threshold sweep lo:hi:count (ms); defaults to 61 points over the
    /// device's latency range.
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, serde::Serialize)]
struct ParetoArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    device: String,
    #[command(flatten)]
    source: PredictionSource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, serde::Serialize)]
struct ErrorboundArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long)]
    device: String,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, serde::Serialize)]
struct RelationArgs {
    #[arg(long)]
    table: PathBuf,
    /// Binary predictor checkpoint.
    #[arg(long)]
    ckpt: PathBuf,
    /// Number of sampled models for the pair diagnostics.
    #[arg(long, default_value_t = 1000)]
    sample: usize,
    /// Simple-cycle enumeration cutoff.
    #[arg(long, default_value_t = 10_000_000)]
    cutoff: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Entry point used by the `hwnas` binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenSynthetic(args) => commands::gen_synthetic(&args),
        Command::TrainPredictor(args) => commands::train_predictor(&args),
        Command::Search(args) => commands::search(&args),
        Command::Analyze(args) => match args.report {
            AnalyzeCommand::Oracle(a) => commands::analyze_oracle(&a),
            AnalyzeCommand::Pareto(a) => commands::analyze_pareto(&a),
            AnalyzeCommand::Errorbound(a) => commands::analyze_errorbound(&a),
            AnalyzeCommand::Relation(a) => commands::analyze_relation(&a),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hwnas: {e}");
            e.exit_code()
        }
    }
}
