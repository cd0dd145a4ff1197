//! The predictor zoo: unary GCN latency/accuracy predictors, the binary
//! relation predictor, and the layer-wise / FLOPS baselines.

mod binary;
mod layerwise;
mod rank;
mod unary;

pub use binary::{
    binary_forward, binary_loss_and_grads, build_pair_dataset, train_binary,
    train_binary_soft_sigmoid, BinaryHead, BinaryPredictor, BinaryTrainResult, LabelKind,
    PairSample, ACC_SOFTMAX_SCALE,
};
pub use layerwise::{
    flops_proxy, layerwise_calibrate, layerwise_predict, load_op_costs_csv, LayerwiseCostModel,
};
pub use rank::{rank_by_comparator, rank_candidates};
pub use unary::{
    load_binary_checkpoint, load_unary_checkpoint, predict_unary, save_binary_checkpoint,
    save_unary_checkpoint, split_ids, UnaryKind,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("degenerate calibration: {0}")]
    DegenerateCalibration(String),
    #[error(transparent)]
    Gcn(#[from] crate::gcn::GcnError),
    #[error(transparent)]
    Bench(#[from] crate::bench::BenchError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
