//! Unary predictor glue: prediction, dataset splits and checkpoints.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use super::binary::{BinaryHead, BinaryPredictor};
use super::PredictorError;
use crate::gcn::{read_checkpoint, write_checkpoint, Checkpoint, GcnModel, GcnTrunk, TargetTransform};
use crate::space::EncodedGraph;

/// What a unary predictor estimates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnaryKind {
    /// Latency on a named device (trained in log-space by default).
    Latency { device: String },
    /// Validation accuracy in percent.
    Accuracy,
    /// FLOPS count (transfer-learning source).
    Flops,
}

impl UnaryKind {
    pub fn tag(&self) -> &'static str {
        match self {
            UnaryKind::Latency { .. } => "unary_latency",
            UnaryKind::Accuracy => "unary_accuracy",
            UnaryKind::Flops => "unary_flops",
        }
    }

    pub fn default_transform(&self) -> TargetTransform {
        match self {
            UnaryKind::Latency { .. } | UnaryKind::Flops => TargetTransform::Log,
            UnaryKind::Accuracy => TargetTransform::Identity,
        }
    }
}

pub(crate) fn init_head(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Array2<f64> {
    crate::gcn::init_weight(rows, cols, rng)
}

/// Scalar prediction in natural units (ms or %).
pub fn predict_unary(model: &GcnModel, g: &EncodedGraph) -> Result<f64, PredictorError> {
    Ok(model.predict(&[g])?[0])
}

/// Disjoint train/val/test arch-id split, seeded.
pub fn split_ids(
    ids: &[&str],
    train: usize,
    val: usize,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>, Vec<String>), PredictorError> {
    if train + val > ids.len() {
        return Err(PredictorError::Usage(format!(
            "split {train}+{val} exceeds table size {}",
            ids.len()
        )));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let pick = |range: std::ops::Range<usize>| -> Vec<String> {
        order[range].iter().map(|&i| ids[i].to_string()).collect()
    };
    Ok((
        pick(0..train),
        pick(train..train + val),
        pick(train + val..ids.len()),
    ))
}

fn trunk_tensors(trunk: &GcnTrunk) -> Vec<(String, Array2<f64>)> {
    trunk
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| (format!("trunk.{i}"), w.clone()))
        .collect()
}

fn trunk_from_checkpoint(ckpt: &Checkpoint) -> Result<GcnTrunk, PredictorError> {
    let mut weights = Vec::new();
    for i in 0.. {
        match ckpt.tensors.iter().find(|(n, _)| *n == format!("trunk.{i}")) {
            Some((_, w)) => weights.push(w.clone()),
            None => break,
        }
    }
    if weights.is_empty() {
        return Err(PredictorError::Usage("checkpoint has no trunk tensors".into()));
    }
    Ok(GcnTrunk { weights })
}

/// Writes a unary predictor checkpoint with its kind tag.
pub fn save_unary_checkpoint(
    model: &GcnModel,
    kind: &UnaryKind,
    path: &Path,
) -> Result<(), PredictorError> {
    let mut meta = BTreeMap::from([(
        "transform".to_string(),
        match model.transform {
            TargetTransform::Identity => "identity".to_string(),
            TargetTransform::Log => "log".to_string(),
        },
    )]);
    if let UnaryKind::Latency { device } = kind {
        meta.insert("device".into(), device.clone());
    }
    let mut tensors = trunk_tensors(&model.trunk);
    tensors.push(("head.w".into(), model.head_w.clone()));
    tensors.push(("head.b".into(), model.head_b.clone()));
    let ckpt = Checkpoint {
        kind: kind.tag().to_string(),
        meta,
        tensors,
    };
    write_checkpoint(&ckpt, path)?;
    Ok(())
}

/// Reads a unary predictor checkpoint.
pub fn load_unary_checkpoint(path: &Path) -> Result<(GcnModel, UnaryKind), PredictorError> {
    let ckpt = read_checkpoint(path)?;
    let kind = match ckpt.kind.as_str() {
        "unary_latency" => UnaryKind::Latency {
            device: ckpt.meta_value("device")?.to_string(),
        },
        "unary_accuracy" => UnaryKind::Accuracy,
        "unary_flops" => UnaryKind::Flops,
        other => {
            return Err(PredictorError::Usage(format!(
                "checkpoint kind {other:?} is not a unary predictor"
            )))
        }
    };
    let transform = match ckpt.meta_value("transform")? {
        "log" => TargetTransform::Log,
        "identity" => TargetTransform::Identity,
        other => {
            return Err(PredictorError::Usage(format!("unknown transform {other:?}")))
        }
    };
    let model = GcnModel {
        trunk: trunk_from_checkpoint(&ckpt)?,
        head_w: ckpt.tensor("head.w")?.clone(),
        head_b: ckpt.tensor("head.b")?.clone(),
        transform,
    };
    Ok((model, kind))
}

/// Writes a binary relation predictor checkpoint.
pub fn save_binary_checkpoint(bp: &BinaryPredictor, path: &Path) -> Result<(), PredictorError> {
    let meta = BTreeMap::from([(
        "head".to_string(),
        match bp.head {
            BinaryHead::Softmax2 => "softmax2".to_string(),
            BinaryHead::Sigmoid1 => "sigmoid1".to_string(),
        },
    )]);
    let mut tensors = trunk_tensors(&bp.trunk);
    tensors.push(("head.w".into(), bp.head_w.clone()));
    tensors.push(("head.b".into(), bp.head_b.clone()));
    let ckpt = Checkpoint {
        kind: "binary".into(),
        meta,
        tensors,
    };
    write_checkpoint(&ckpt, path)?;
    Ok(())
}

/// Reads a binary relation predictor checkpoint.
pub fn load_binary_checkpoint(path: &Path) -> Result<BinaryPredictor, PredictorError> {
    let ckpt = read_checkpoint(path)?;
    if ckpt.kind != "binary" {
        return Err(PredictorError::Usage(format!(
            "checkpoint kind {:?} is not a binary predictor",
            ckpt.kind
        )));
    }
    let head = match ckpt.meta_value("head")? {
        "softmax2" => BinaryHead::Softmax2,
        "sigmoid1" => BinaryHead::Sigmoid1,
        other => return Err(PredictorError::Usage(format!("unknown head {other:?}"))),
    };
    Ok(BinaryPredictor {
        trunk: trunk_from_checkpoint(&ckpt)?,
        head_w: ckpt.tensor("head.w")?.clone(),
        head_b: ckpt.tensor("head.b")?.clone(),
        head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::GcnConfig;
    use crate::space::{encode, enumerate_space, Space};

    fn small_arch() -> GcnConfig {
        GcnConfig {
            input_dim: 6,
            hidden: vec![10, 6],
        }
    }

    #[test]
    fn zero_model_is_constant_across_graphs() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut model = GcnModel::init(&small_arch(), TargetTransform::Identity, &mut rng);
        for w in &mut model.trunk.weights {
            w.fill(0.0);
        }
        let outputs: Vec<f64> = enumerate_space(Space::Nb201)
            .unwrap()
            .step_by(3001)
            .take(6)
            .map(|c| predict_unary(&model, &encode(&c)).unwrap())
            .collect();
        assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn prediction_invariant_under_global_fixing_relabel() {
        // isomorphic relabelings keeping the global slot produce identical
        // predictions
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let model = GcnModel::init(&small_arch(), TargetTransform::Identity, &mut rng);
        let g = encode(&enumerate_space(Space::Nb201).unwrap().nth(7777).unwrap());
        let perm: Vec<usize> = vec![2, 6, 0, 5, 1, 4, 3, 7, 8];
        let mut p = Array2::zeros((9, 9));
        for (i, &j) in perm.iter().enumerate() {
            p[[i, j]] = 1.0;
        }
        let relabeled = EncodedGraph {
            space: g.space,
            arch_id: g.arch_id.clone(),
            adjacency: p.dot(&g.adjacency).dot(&p.t()),
            features: p.dot(&g.features),
        };
        let a = predict_unary(&model, &g).unwrap();
        let b = predict_unary(&model, &relabeled).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let ids: Vec<String> = (0..100).map(|i| format!("m{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let (train, val, test) = split_ids(&refs, 60, 10, 5).unwrap();
        assert_eq!((train.len(), val.len(), test.len()), (60, 10, 30));
        let mut all: Vec<&String> = train.iter().chain(&val).chain(&test).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 100);
        // seeded determinism
        let again = split_ids(&refs, 60, 10, 5).unwrap();
        assert_eq!(again.0, train);
        // oversized split is an error
        assert!(split_ids(&refs, 95, 10, 5).is_err());
    }

    #[test]
    fn unary_checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lat.ckpt");
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let model = GcnModel::init(&small_arch(), TargetTransform::Log, &mut rng);
        let kind = UnaryKind::Latency {
            device: "desk-gpu".into(),
        };
        save_unary_checkpoint(&model, &kind, &path).unwrap();
        let (back, back_kind) = load_unary_checkpoint(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(back_kind, kind);
    }

    #[test]
    fn binary_checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bp.ckpt");
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let bp = BinaryPredictor::init(&small_arch(), BinaryHead::Softmax2, &mut rng);
        save_binary_checkpoint(&bp, &path).unwrap();
        let back = load_binary_checkpoint(&path).unwrap();
        assert_eq!(back, bp);
        // kind confusion is rejected
        assert!(load_unary_checkpoint(&path).is_err());
    }
}
