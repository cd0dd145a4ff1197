//! Unary regression training: MSE loss, early stopping, weight transfer.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::forward::{backward_trunk, forward_trunk};
use super::model::{init_weight, GcnConfig, GcnModel, GcnTrunk, TargetTransform};
use super::optim::{adamw_step, AdamParams, AdamState};
use super::schedule::{lr_schedule_step, LrSchedule};
use super::GcnError;
use crate::space::EncodedGraph;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchedKind {
    Plateau,
    Cosine,
}

/// Training protocol knobs shared by the unary and binary predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr0: f64,
    pub schedule: SchedKind,
    pub weight_decay: f64,
    pub dropout: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    /// Latency-predictor protocol: batch 10, plateau halving with patience
    /// 10, AdamW at 8e-4 with 5e-4 decay, dropout 0.002, up to 250 epochs
    /// with early-stopping patience 35.
    fn default() -> Self {
        TrainConfig {
            batch_size: 10,
            lr0: 0.0008,
            schedule: SchedKind::Plateau,
            weight_decay: 0.0005,
            dropout: 0.002,
            max_epochs: 250,
            early_stop_patience: 35,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    /// Accuracy-predictor protocol: cosine annealing at 3.5e-4, dropout 0.2.
    /// `train_size` picks the batch size tier (100 → 50, 50 → 32, 25 → 16).
    pub fn accuracy_unary(train_size: usize) -> Self {
        TrainConfig {
            batch_size: if train_size >= 100 {
                50
            } else if train_size >= 50 {
                32
            } else {
                16
            },
            lr0: 0.00035,
            schedule: SchedKind::Cosine,
            dropout: 0.2,
            ..TrainConfig::default()
        }
    }

    /// Binary-predictor protocol: as the accuracy protocol but with the
    /// pairwise batch tiers (100 → 64, otherwise 32).
    pub fn binary(train_size: usize) -> Self {
        TrainConfig {
            batch_size: if train_size >= 100 { 64 } else { 32 },
            lr0: 0.00035,
            schedule: SchedKind::Cosine,
            dropout: 0.2,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), GcnError> {
        if !(self.lr0 > 0.0) {
            return Err(GcnError::Config("lr0 must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(GcnError::Config("dropout outside [0, 1]".into()));
        }
        if self.batch_size == 0 {
            return Err(GcnError::Config("batch_size must be positive".into()));
        }
        if self.early_stop_patience >= self.max_epochs {
            return Err(GcnError::Config(
                "early_stop_patience must be smaller than max_epochs".into(),
            ));
        }
        Ok(())
    }

    pub fn schedule_state(&self) -> LrSchedule {
        match self.schedule {
            SchedKind::Plateau => LrSchedule::plateau(self.lr0),
            SchedKind::Cosine => LrSchedule::cosine(self.lr0, self.max_epochs),
        }
    }
}

/// Gradients in `params_mut()` order: trunk layers, head weight, head bias.
pub struct UnaryGrads {
    pub tensors: Vec<Array2<f64>>,
}

/// Mean-squared-error loss of a batch and its parameter gradients.
///
/// `targets` must already be in transformed space. The loss is averaged over
/// the batch.
pub fn unary_loss_and_grads(
    model: &GcnModel,
    graphs: &[&EncodedGraph],
    targets: &[f64],
    dropout: f64,
    train: bool,
    rng: &mut ChaCha20Rng,
) -> Result<(f64, UnaryGrads), GcnError> {
    if graphs.len() != targets.len() || graphs.is_empty() {
        return Err(GcnError::Dimension(
            "graphs and targets must be equal-length and non-empty".into(),
        ));
    }
    let batch = graphs.len() as f64;
    let (emb, mut tape) = forward_trunk(&model.trunk, graphs, dropout, train, rng)?;
    let preds = emb.dot(&model.head_w) + model.head_b[[0, 0]];

    let mut loss = 0.0;
    let mut d_pred = Array2::zeros((graphs.len(), 1));
    for (i, &t) in targets.iter().enumerate() {
        let err = preds[[i, 0]] - t;
        loss += err * err;
        d_pred[[i, 0]] = 2.0 * err / batch;
    }
    loss /= batch;

    let d_head_w = emb.t().dot(&d_pred);
    let d_head_b = Array2::from_elem((1, 1), d_pred.sum());
    let d_emb = d_pred.dot(&model.head_w.t());
    let mut tensors = backward_trunk(&model.trunk, &mut tape, &d_emb)?;
    tensors.push(d_head_w);
    tensors.push(d_head_b);
    Ok((loss, UnaryGrads { tensors }))
}

fn eval_loss(model: &GcnModel, data: &[(&EncodedGraph, f64)]) -> Result<f64, GcnError> {
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut total = 0.0;
    for chunk in data.chunks(256) {
        let graphs: Vec<&EncodedGraph> = chunk.iter().map(|(g, _)| *g).collect();
        let (emb, _) = forward_trunk(&model.trunk, &graphs, 0.0, false, &mut rng)?;
        let preds = emb.dot(&model.head_w) + model.head_b[[0, 0]];
        for (i, (_, t)) in chunk.iter().enumerate() {
            let err = preds[[i, 0]] - t;
            total += err * err;
        }
    }
    Ok(total / data.len() as f64)
}

impl GcnModel {
    /// Predictions in natural units (inverse-transformed), eval mode.
    pub fn predict(&self, graphs: &[&EncodedGraph]) -> Result<Vec<f64>, GcnError> {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mut out = Vec::with_capacity(graphs.len());
        for chunk in graphs.chunks(512) {
            let (emb, _) = forward_trunk(&self.trunk, chunk, 0.0, false, &mut rng)?;
            let preds = emb.dot(&self.head_w) + self.head_b[[0, 0]];
            out.extend(preds.column(0).iter().map(|&p| self.transform.invert(p)));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct UnaryTrainResult {
    pub model: GcnModel,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// Validation loss after each epoch (transformed space).
    pub val_history: Vec<f64>,
}

/// Trains a unary predictor with MSE, AdamW, the configured schedule and
/// early stopping; returns the best-validation-loss weights.
///
/// Targets are given in natural units and transformed internally. When no
/// validation split is available the training set doubles as one. With
/// `transfer_src` the trunk starts from the given weights and only the head
/// is freshly initialized.
pub fn train_unary(
    train: &[(EncodedGraph, f64)],
    val: Option<&[(EncodedGraph, f64)]>,
    arch: &GcnConfig,
    transform: TargetTransform,
    config: &TrainConfig,
    transfer_src: Option<&GcnTrunk>,
) -> Result<UnaryTrainResult, GcnError> {
    config.validate()?;
    arch.validate()?;
    if train.is_empty() {
        return Err(GcnError::EmptyDataset);
    }
    let all_targets = train.iter().map(|(_, t)| *t).chain(val.iter().flat_map(|v| v.iter().map(|(_, t)| *t)));
    for t in all_targets {
        if !t.is_finite() {
            return Err(GcnError::Config("non-finite target".into()));
        }
        if transform == TargetTransform::Log && t <= 0.0 {
            return Err(GcnError::Config("log transform requires positive targets".into()));
        }
    }

    let mut init_rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "unary-init"));
    let mut shuffle_rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "unary-shuffle"));
    let mut dropout_rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "unary-dropout"));

    let mut model = GcnModel::init(arch, transform, &mut init_rng);
    if let Some(src) = transfer_src {
        if !src.same_shape(&model.trunk) {
            return Err(GcnError::Dimension(
                "transfer source trunk shape differs".into(),
            ));
        }
        model.trunk = src.clone();
    }

    let train_t: Vec<(&EncodedGraph, f64)> =
        train.iter().map(|(g, t)| (g, transform.apply(*t))).collect();
    let val_owned: Vec<(&EncodedGraph, f64)> = match val {
        Some(v) => v.iter().map(|(g, t)| (g, transform.apply(*t))).collect(),
        None => train_t.clone(),
    };

    let adam = AdamParams::with_weight_decay(config.weight_decay);
    let shapes: Vec<(usize, usize)> = {
        let mut m = model.clone();
        m.params_mut().iter().map(|p| p.dim()).collect()
    };
    let mut state = AdamState::new(&shapes, adam);
    let mut schedule = config.schedule_state();

    let mut best: Option<(f64, GcnModel, usize)> = None;
    let mut bad_epochs = 0usize;
    let mut val_history = Vec::new();
    let mut indices: Vec<usize> = (0..train_t.len()).collect();
    let mut epochs_run = 0usize;

    for epoch in 0..config.max_epochs {
        epochs_run = epoch + 1;
        let lr = match config.schedule {
            SchedKind::Cosine => lr_schedule_step(&mut schedule, epoch, 0.0),
            SchedKind::Plateau => schedule.current(),
        };
        use rand::seq::SliceRandom;
        indices.shuffle(&mut shuffle_rng);
        for chunk in indices.chunks(config.batch_size) {
            let graphs: Vec<&EncodedGraph> = chunk.iter().map(|&i| train_t[i].0).collect();
            let targets: Vec<f64> = chunk.iter().map(|&i| train_t[i].1).collect();
            let (_, grads) = unary_loss_and_grads(
                &model,
                &graphs,
                &targets,
                config.dropout,
                true,
                &mut dropout_rng,
            )?;
            let grad_refs: Vec<&Array2<f64>> = grads.tensors.iter().collect();
            let mut params = model.params_mut();
            adamw_step(&mut state, &mut params, &grad_refs, lr);
        }
        model.check_finite()?;

        let val_loss = eval_loss(&model, &val_owned)?;
        val_history.push(val_loss);
        let improved = best.as_ref().map(|(b, _, _)| val_loss < *b).unwrap_or(true);
        if improved {
            best = Some((val_loss, model.clone(), epoch));
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            if bad_epochs >= config.early_stop_patience {
                break;
            }
        }
        if config.schedule == SchedKind::Plateau {
            lr_schedule_step(&mut schedule, epoch, val_loss);
        }
    }

    let (best_val_loss, model, best_epoch) = best.expect("at least one epoch ran");
    Ok(UnaryTrainResult {
        model,
        best_val_loss,
        best_epoch,
        epochs_run,
        val_history,
    })
}

/// Copies the GCN layers of `src` into a clone of `dst` whose head is
/// reinitialized randomly.
pub fn transfer_init(
    dst: &GcnModel,
    src: &GcnModel,
    rng: &mut ChaCha20Rng,
) -> Result<GcnModel, GcnError> {
    if !dst.trunk.same_shape(&src.trunk) {
        return Err(GcnError::Dimension("trunk shapes differ".into()));
    }
    let mut out = dst.clone();
    out.trunk = src.trunk.clone();
    out.head_w = init_weight(out.trunk.embedding_dim(), 1, rng);
    out.head_b = Array2::zeros((1, 1));
    Ok(out)
}
