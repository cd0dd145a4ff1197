//! Ground-truth benchmark tables.
//!
//! A table maps every architecture of a space to trained accuracies (several
//! pseudo-seeds), per-device mean latencies, FLOPS and parameter counts.
//! Tables are ingested from a versioned CSV + JSON sidecar pair or generated
//! synthetically for fully reproducible desk-scale experiments.

mod io;
mod synth;
mod table;

pub use io::{load_table, load_table_mapped, save_table, sidecar_path, ColumnMapping, TableSidecar};
pub use synth::{synth_table, synth_table_from_cells, DeviceProfile, SyntheticSpec};
pub use table::{AccuracyKind, AccuracyMode, BenchmarkEntry, BenchmarkTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown architecture {0:?}")]
    UnknownArch(String),
    #[error("unknown device {0:?}")]
    UnknownDevice(String),
    #[error("schema error at row {row}: {msg}")]
    Schema { row: usize, msg: String },
    #[error("invalid table: {0}")]
    Invalid(String),
    #[error(transparent)]
    Space(#[from] crate::space::SpaceError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("sidecar error: {0}")]
    Json(#[from] serde_json::Error),
}
