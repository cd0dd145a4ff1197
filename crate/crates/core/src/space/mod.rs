//! Search-space cells and their matrix encoding.
//!
//! A cell is a small labeled DAG of operations. NAS-Bench-201 cells are
//! parsed from architecture strings; NAS-Bench-101 cells are ingested from an
//! external cell list. Cells are optimized (zero/skip removal, dangling-node
//! detachment) and encoded into the fixed-size adjacency and one-hot feature
//! matrices consumed by the GCN.

mod cell;
mod encode;
mod index;
mod nb101;

pub use cell::{
    enumerate_space, parse_arch_string, CellGraph, NodeRef, OpKind, Space, NB201_OPS,
    NB201_SLOTS,
};
pub use encode::{
    encode, optimize_graph, EncodedGraph, FEATURE_DIM, FEAT_CONV1X1, FEAT_CONV3X3, FEAT_GLOBAL,
    FEAT_INPUT, FEAT_OUTPUT, FEAT_POOL,
};
pub use index::CellIndex;
pub use nb101::{load_nb101_cells, Nb101Cell};

use thiserror::Error;

/// Errors produced while parsing, validating or encoding cells.
#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("malformed architecture string at token {token:?}: {reason}")]
    Parse { token: String, reason: String },
    #[error("unknown operation name {token:?}")]
    UnknownOp { token: String },
    #[error("invalid cell: {0}")]
    InvalidCell(String),
    #[error("enumeration of {0:?} requires an external cell list")]
    UnsupportedEnumeration(Space),
    #[error("failed to read cell list: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse cell list: {0}")]
    Json(#[from] serde_json::Error),
}
