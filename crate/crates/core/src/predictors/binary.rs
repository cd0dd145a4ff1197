//! Binary relation predictor.
//!
//! A shared GCN trunk embeds both input models; the concatenated embeddings
//! pass through a fully connected head producing either two softmax logits
//! (trained against softmax targets of the ground-truth accuracies with KL
//! divergence) or a single sigmoid logit (trained with binary cross-entropy
//! against soft or hard labels).

use std::collections::BTreeMap;

use ndarray::{s, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use super::PredictorError;
use crate::gcn::{
    adamw_step, backward_trunk, embed, forward_trunk, lr_schedule_step, AdamParams, AdamState,
    GcnConfig, GcnError, GcnTrunk, SchedKind, TrainConfig,
};
use crate::space::EncodedGraph;
use crate::util::derive_seed;

/// Accuracies are divided by this before softmax targets; raw percentages
/// saturate the target distribution.
pub const ACC_SOFTMAX_SCALE: f64 = 100.0;

/// Head shape of the relation predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryHead {
    /// Two logits + softmax (the default).
    Softmax2,
    /// One logit + sigmoid (label-ablation variant).
    Sigmoid1,
}

impl BinaryHead {
    fn logits(self) -> usize {
        match self {
            BinaryHead::Softmax2 => 2,
            BinaryHead::Sigmoid1 => 1,
        }
    }
}

/// Pairwise training labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// Softmax of the scaled accuracies, KL-divergence loss.
    SoftmaxKl,
    /// `(acc(a) − acc(b) + 1) / 2` on [0,1]-normalized accuracies, BCE loss.
    SigmoidSoft,
    /// 1 if the first model is strictly more accurate, else 0; BCE loss.
    SigmoidHard,
}

/// One ordered pair of models, referenced by index into a model list.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub a: usize,
    pub b: usize,
    pub acc_a: f64,
    pub acc_b: f64,
    /// Softmax target distribution (p_first, p_second).
    pub target: [f64; 2],
}

fn softmax2(x1: f64, x2: f64) -> [f64; 2] {
    let m = x1.max(x2);
    let e1 = (x1 - m).exp();
    let e2 = (x2 - m).exp();
    [e1 / (e1 + e2), e2 / (e1 + e2)]
}

/// All ordered pairs (n·(n−1) samples from n models) with softmax targets.
pub fn build_pair_dataset(models: &[(String, f64)]) -> Result<Vec<PairSample>, PredictorError> {
    if models.len() < 2 {
        return Err(PredictorError::Usage(
            "need at least two models to build pairs".into(),
        ));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (id, _) in models {
        if !seen.insert(id.as_str()) {
            return Err(PredictorError::Usage(format!("duplicate arch_id {id:?}")));
        }
    }
    let mut pairs = Vec::with_capacity(models.len() * (models.len() - 1));
    for (i, (_, acc_a)) in models.iter().enumerate() {
        for (j, (_, acc_b)) in models.iter().enumerate() {
            if i == j {
                continue;
            }
            pairs.push(PairSample {
                a: i,
                b: j,
                acc_a: *acc_a,
                acc_b: *acc_b,
                target: softmax2(acc_a / ACC_SOFTMAX_SCALE, acc_b / ACC_SOFTMAX_SCALE),
            });
        }
    }
    Ok(pairs)
}

/// Trunk + pairwise head.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPredictor {
    pub trunk: GcnTrunk,
    /// (2 · embedding_dim) × logits.
    pub head_w: Array2<f64>,
    /// 1 × logits.
    pub head_b: Array2<f64>,
    pub head: BinaryHead,
}

impl BinaryPredictor {
    pub fn init(arch: &GcnConfig, head: BinaryHead, rng: &mut ChaCha20Rng) -> Self {
        let trunk = GcnTrunk::init(arch, rng);
        let head_w = super::unary::init_head(2 * arch.embedding_dim(), head.logits(), rng);
        BinaryPredictor {
            trunk,
            head_w,
            head_b: Array2::zeros((1, head.logits())),
            head,
        }
    }

    /// Transfer variant: reuse an existing trunk, fresh head.
    pub fn from_trunk(trunk: GcnTrunk, head: BinaryHead, rng: &mut ChaCha20Rng) -> Self {
        let head_w = super::unary::init_head(2 * trunk.embedding_dim(), head.logits(), rng);
        BinaryPredictor {
            head_w,
            head_b: Array2::zeros((1, head.logits())),
            trunk,
            head,
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut params: Vec<&mut Array2<f64>> = self.trunk.weights.iter_mut().collect();
        params.push(&mut self.head_w);
        params.push(&mut self.head_b);
        params
    }

    /// Probability pair from two cached embedding rows.
    pub fn probabilities_from_embeddings(&self, emb_a: &[f64], emb_b: &[f64]) -> (f64, f64) {
        let e = self.trunk.embedding_dim();
        let mut logits = vec![0.0; self.head.logits()];
        for (c, logit) in logits.iter_mut().enumerate() {
            let mut acc = self.head_b[[0, c]];
            for k in 0..e {
                acc += emb_a[k] * self.head_w[[k, c]] + emb_b[k] * self.head_w[[e + k, c]];
            }
            *logit = acc;
        }
        match self.head {
            BinaryHead::Softmax2 => {
                let p = softmax2(logits[0], logits[1]);
                (p[0], p[1])
            }
            BinaryHead::Sigmoid1 => {
                let p1 = 1.0 / (1.0 + (-logits[0]).exp());
                (p1, 1.0 - p1)
            }
        }
    }

    /// Precomputes trunk embeddings for a candidate list.
    pub fn embed_all(&self, graphs: &[&EncodedGraph]) -> Result<Array2<f64>, GcnError> {
        embed(&self.trunk, graphs)
    }

    pub fn check_finite(&self) -> Result<(), GcnError> {
        for (i, w) in self.trunk.weights.iter().enumerate() {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(GcnError::NonFinite(format!("trunk layer {i}")));
            }
        }
        if self.head_w.iter().chain(self.head_b.iter()).any(|v| !v.is_finite()) {
            return Err(GcnError::NonFinite("head".into()));
        }
        Ok(())
    }
}

/// `(p1, p2)`: probability that the first model is better, and the converse.
pub fn binary_forward(
    bp: &BinaryPredictor,
    g1: &EncodedGraph,
    g2: &EncodedGraph,
) -> Result<(f64, f64), PredictorError> {
    let emb = bp.embed_all(&[g1, g2])?;
    Ok(bp.probabilities_from_embeddings(
        emb.row(0).as_slice().unwrap(),
        emb.row(1).as_slice().unwrap(),
    ))
}

fn pair_label(pair: &PairSample, labels: LabelKind) -> [f64; 2] {
    match labels {
        LabelKind::SoftmaxKl => pair.target,
        LabelKind::SigmoidSoft => {
            let l = ((pair.acc_a - pair.acc_b) / ACC_SOFTMAX_SCALE + 1.0) / 2.0;
            [l.clamp(0.0, 1.0), 0.0]
        }
        LabelKind::SigmoidHard => [if pair.acc_a > pair.acc_b { 1.0 } else { 0.0 }, 0.0],
    }
}

/// Batch loss of the relation objective and gradients for every parameter
/// (trunk layers, head weight, head bias).
///
/// Each distinct model in the batch is embedded once; pairs share those
/// embeddings (and their dropout masks), which is also how gradients are
/// accumulated.
pub fn binary_loss_and_grads(
    bp: &BinaryPredictor,
    graphs: &[&EncodedGraph],
    pairs: &[&PairSample],
    labels: LabelKind,
    dropout: f64,
    train: bool,
    rng: &mut ChaCha20Rng,
) -> Result<(f64, Vec<Array2<f64>>), PredictorError> {
    if pairs.is_empty() {
        return Err(PredictorError::Usage("empty pair batch".into()));
    }
    match (bp.head, labels) {
        (BinaryHead::Softmax2, LabelKind::SoftmaxKl) => {}
        (BinaryHead::Sigmoid1, LabelKind::SigmoidSoft | LabelKind::SigmoidHard) => {}
        _ => {
            return Err(PredictorError::Usage(
                "head shape does not match the label kind".into(),
            ))
        }
    }

    // distinct models of this batch, embedded once
    let mut local: BTreeMap<usize, usize> = BTreeMap::new();
    for p in pairs {
        let next = local.len();
        local.entry(p.a).or_insert(next);
        let next = local.len();
        local.entry(p.b).or_insert(next);
    }
    let batch_graphs: Vec<&EncodedGraph> = {
        let mut v = vec![graphs[0]; local.len()];
        for (&model, &slot) in &local {
            v[slot] = graphs
                .get(model)
                .copied()
                .ok_or_else(|| PredictorError::Usage(format!("pair references model {model}")))?;
        }
        v
    };
    let (emb, mut tape) = forward_trunk(&bp.trunk, &batch_graphs, dropout, train, rng)?;
    let e = bp.trunk.embedding_dim();
    let n_logits = bp.head.logits();
    let batch = pairs.len() as f64;

    // head forward over all pairs
    let mut concat = Array2::zeros((pairs.len(), 2 * e));
    for (row, p) in pairs.iter().enumerate() {
        let (sa, sb) = (local[&p.a], local[&p.b]);
        concat.slice_mut(s![row, 0..e]).assign(&emb.row(sa));
        concat.slice_mut(s![row, e..2 * e]).assign(&emb.row(sb));
    }
    let logits = concat.dot(&bp.head_w) + &bp.head_b.row(0);

    let mut loss = 0.0;
    let mut d_logits = Array2::zeros((pairs.len(), n_logits));
    for (row, p) in pairs.iter().enumerate() {
        let label = pair_label(p, labels);
        match bp.head {
            BinaryHead::Softmax2 => {
                let pred = softmax2(logits[[row, 0]], logits[[row, 1]]);
                let (t1, t2) = (label[0], label[1]);
                let kl = |t: f64, q: f64| if t > 0.0 { t * (t / q.max(1e-300)).ln() } else { 0.0 };
                loss += kl(t1, pred[0]) + kl(t2, pred[1]);
                d_logits[[row, 0]] = (pred[0] - t1) / batch;
                d_logits[[row, 1]] = (pred[1] - t2) / batch;
            }
            BinaryHead::Sigmoid1 => {
                let z = logits[[row, 0]];
                let s = 1.0 / (1.0 + (-z).exp());
                let l = label[0];
                // numerically stable BCE on the logit
                loss += z.max(0.0) - z * l + (1.0 + (-z.abs()).exp()).ln();
                d_logits[[row, 0]] = (s - l) / batch;
            }
        }
    }
    loss /= batch;

    let d_head_w = concat.t().dot(&d_logits);
    let d_head_b = {
        let mut b = Array2::zeros((1, n_logits));
        for c in 0..n_logits {
            b[[0, c]] = d_logits.column(c).sum();
        }
        b
    };
    let d_concat = d_logits.dot(&bp.head_w.t());
    let mut d_emb = Array2::zeros((local.len(), e));
    for (row, p) in pairs.iter().enumerate() {
        let (sa, sb) = (local[&p.a], local[&p.b]);
        let slice = d_concat.row(row);
        for k in 0..e {
            d_emb[[sa, k]] += slice[k];
            d_emb[[sb, k]] += slice[e + k];
        }
    }
    let mut grads = backward_trunk(&bp.trunk, &mut tape, &d_emb)?;
    grads.push(d_head_w);
    grads.push(d_head_b);
    Ok((loss, grads))
}

fn eval_pairs_loss(
    bp: &BinaryPredictor,
    graphs: &[&EncodedGraph],
    pairs: &[PairSample],
    labels: LabelKind,
) -> Result<f64, PredictorError> {
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let mut total = 0.0;
    for chunk in pairs.chunks(4096) {
        let refs: Vec<&PairSample> = chunk.iter().collect();
        let (loss, _) = binary_loss_and_grads(bp, graphs, &refs, labels, 0.0, false, &mut rng)?;
        total += loss * chunk.len() as f64;
    }
    Ok(total / pairs.len() as f64)
}

#[derive(Debug, Clone)]
pub struct BinaryTrainResult {
    pub predictor: BinaryPredictor,
    pub best_val_loss: f64,
    pub epochs_run: usize,
    pub val_history: Vec<f64>,
}

fn train_relation(
    mut bp: BinaryPredictor,
    graphs: &[&EncodedGraph],
    pairs: &[PairSample],
    val_pairs: Option<&[PairSample]>,
    labels: LabelKind,
    config: &TrainConfig,
) -> Result<BinaryTrainResult, PredictorError> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(PredictorError::Usage("empty pair set".into()));
    }
    let mut shuffle_rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "binary-shuffle"));
    let mut dropout_rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "binary-dropout"));

    let adam = AdamParams::with_weight_decay(config.weight_decay);
    let shapes: Vec<(usize, usize)> = bp.params_mut().iter().map(|p| p.dim()).collect();
    let mut state = AdamState::new(&shapes, adam);
    let mut schedule = config.schedule_state();

    let val = val_pairs.unwrap_or(pairs);
    let mut best: Option<(f64, BinaryPredictor)> = None;
    let mut bad_epochs = 0usize;
    let mut val_history = Vec::new();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epochs_run = 0usize;

    for epoch in 0..config.max_epochs {
        epochs_run = epoch + 1;
        let lr = match config.schedule {
            SchedKind::Cosine => lr_schedule_step(&mut schedule, epoch, 0.0),
            SchedKind::Plateau => schedule.current(),
        };
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&PairSample> = chunk.iter().map(|&i| &pairs[i]).collect();
            let (_, grads) = binary_loss_and_grads(
                &bp,
                graphs,
                &batch,
                labels,
                config.dropout,
                true,
                &mut dropout_rng,
            )?;
            let grad_refs: Vec<&Array2<f64>> = grads.iter().collect();
            let mut params = bp.params_mut();
            adamw_step(&mut state, &mut params, &grad_refs, lr);
        }
        bp.check_finite()?;

        let val_loss = eval_pairs_loss(&bp, graphs, val, labels)?;
        val_history.push(val_loss);
        let improved = best.as_ref().map(|(b, _)| val_loss < *b).unwrap_or(true);
        if improved {
            best = Some((val_loss, bp.clone()));
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

    let (best_val_loss, predictor) = best.expect("at least one epoch ran");
    Ok(BinaryTrainResult {
        predictor,
        best_val_loss,
        epochs_run,
        val_history,
    })
}

/// Trains the softmax/KL relation predictor (continues from `bp`).
pub fn train_binary(
    bp: BinaryPredictor,
    graphs: &[&EncodedGraph],
    pairs: &[PairSample],
    val_pairs: Option<&[PairSample]>,
    config: &TrainConfig,
) -> Result<BinaryTrainResult, PredictorError> {
    if bp.head != BinaryHead::Softmax2 {
        return Err(PredictorError::Usage("expected a softmax head".into()));
    }
    train_relation(bp, graphs, pairs, val_pairs, LabelKind::SoftmaxKl, config)
}

/// Label-ablation variant: single sigmoid logit with soft or hard labels.
pub fn train_binary_soft_sigmoid(
    bp: BinaryPredictor,
    graphs: &[&EncodedGraph],
    pairs: &[PairSample],
    val_pairs: Option<&[PairSample]>,
    config: &TrainConfig,
    labels: LabelKind,
) -> Result<BinaryTrainResult, PredictorError> {
    if bp.head != BinaryHead::Sigmoid1 {
        return Err(PredictorError::Usage("expected a sigmoid head".into()));
    }
    if labels == LabelKind::SoftmaxKl {
        return Err(PredictorError::Usage(
            "sigmoid training needs soft or hard labels".into(),
        ));
    }
    train_relation(bp, graphs, pairs, val_pairs, labels, config)
}
