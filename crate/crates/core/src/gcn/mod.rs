//! From-scratch graph convolutional network engine.
//!
//! Implements the propagation rule `H^{l+1} = relu(A H^l W^l)` with explicit
//! forward and backward passes (no autodiff), an AdamW optimizer, plateau and
//! cosine learning-rate schedules, dropout, early stopping, weight-transfer
//! initialization and a binary checkpoint container. Everything is `f64` and
//! deterministic for a given seed.

mod checkpoint;
mod forward;
mod model;
mod optim;
mod schedule;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use forward::{backward_trunk, embed, forward_nodes, forward_trunk, ForwardTape};
pub use model::{GcnConfig, GcnModel, GcnTrunk, TargetTransform};
pub(crate) use model::init_weight;
pub use optim::{adamw_step, AdamParams, AdamState};
pub use schedule::{lr_schedule_step, LrSchedule, SchedulePolicy};
pub use train::{
    train_unary, transfer_init, unary_loss_and_grads, SchedKind, TrainConfig, UnaryTrainResult,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GcnError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("forward tape already consumed")]
    StaleTape,
    #[error("non-finite weights after update: {0}")]
    NonFinite(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
