//! Model containers and initialization.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::GcnError;
use crate::space::FEATURE_DIM;

/// Layer-width configuration of the GCN trunk.
///
/// The paper architecture (and the default here) is four hidden layers of
/// width 600 on 6-dimensional one-hot inputs; tests use narrower stacks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcnConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
}

impl Default for GcnConfig {
    fn default() -> Self {
        GcnConfig {
            input_dim: FEATURE_DIM,
            hidden: vec![600; 4],
        }
    }
}

impl GcnConfig {
    pub fn embedding_dim(&self) -> usize {
        *self.hidden.last().expect("at least one layer")
    }

    pub fn validate(&self) -> Result<(), GcnError> {
        if self.hidden.is_empty() {
            return Err(GcnError::Config("need at least one hidden layer".into()));
        }
        if self.input_dim == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(GcnError::Config("zero-width layer".into()));
        }
        Ok(())
    }
}

/// Uniform init scaled by the inverse square root of fan-in.
pub(crate) fn init_weight(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Array2<f64> {
    let bound = 1.0 / (rows as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

/// The shared GCN stack: one weight matrix per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnTrunk {
    pub weights: Vec<Array2<f64>>,
}

impl GcnTrunk {
    pub fn init(config: &GcnConfig, rng: &mut ChaCha20Rng) -> Self {
        let mut weights = Vec::with_capacity(config.hidden.len());
        let mut prev = config.input_dim;
        for &width in &config.hidden {
            weights.push(init_weight(prev, width, rng));
            prev = width;
        }
        GcnTrunk { weights }
    }

    pub fn zeros(config: &GcnConfig) -> Self {
        let mut weights = Vec::with_capacity(config.hidden.len());
        let mut prev = config.input_dim;
        for &width in &config.hidden {
            weights.push(Array2::zeros((prev, width)));
            prev = width;
        }
        GcnTrunk { weights }
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.weights.last().expect("non-empty trunk").ncols()
    }

    pub fn config(&self) -> GcnConfig {
        GcnConfig {
            input_dim: self.input_dim(),
            hidden: self.weights.iter().map(|w| w.ncols()).collect(),
        }
    }

    pub fn same_shape(&self, other: &GcnTrunk) -> bool {
        self.weights.len() == other.weights.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.dim() == b.dim())
    }
}

/// Whether scalar targets are regressed directly or in log-space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetTransform {
    Identity,
    /// Train on ln(target), exponentiate predictions. Natural for latencies,
    /// which span a wide positive range.
    Log,
}

impl TargetTransform {
    pub fn apply(self, y: f64) -> f64 {
        match self {
            TargetTransform::Identity => y,
            TargetTransform::Log => y.ln(),
        }
    }

    pub fn invert(self, y: f64) -> f64 {
        match self {
            TargetTransform::Identity => y,
            TargetTransform::Log => y.exp(),
        }
    }
}

/// A unary scalar predictor: GCN trunk plus a fully connected head.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub trunk: GcnTrunk,
    /// Head weight, embedding_dim × 1.
    pub head_w: Array2<f64>,
    /// Head bias, 1 × 1.
    pub head_b: Array2<f64>,
    pub transform: TargetTransform,
}

impl GcnModel {
    pub fn init(config: &GcnConfig, transform: TargetTransform, rng: &mut ChaCha20Rng) -> Self {
        let trunk = GcnTrunk::init(config, rng);
        let head_w = init_weight(config.embedding_dim(), 1, rng);
        let head_b = Array2::zeros((1, 1));
        GcnModel {
            trunk,
            head_w,
            head_b,
            transform,
        }
    }

    /// Mutable references to every parameter tensor, trunk first.
    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut params: Vec<&mut Array2<f64>> = self.trunk.weights.iter_mut().collect();
        params.push(&mut self.head_w);
        params.push(&mut self.head_b);
        params
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

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn default_config_matches_predictor_architecture() {
        let config = GcnConfig::default();
        assert_eq!(config.input_dim, 6);
        assert_eq!(config.hidden, vec![600, 600, 600, 600]);
        assert_eq!(config.embedding_dim(), 600);
    }

    #[test]
    fn init_shapes_chain() {
        let config = GcnConfig {
            input_dim: 6,
            hidden: vec![8, 5, 7],
        };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let trunk = GcnTrunk::init(&config, &mut rng);
        assert_eq!(trunk.weights[0].dim(), (6, 8));
        assert_eq!(trunk.weights[1].dim(), (8, 5));
        assert_eq!(trunk.weights[2].dim(), (5, 7));
        assert_eq!(trunk.embedding_dim(), 7);
        assert_eq!(trunk.config(), config);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let config = GcnConfig {
            input_dim: 6,
            hidden: vec![16, 16],
        };
        let a = GcnTrunk::init(&config, &mut ChaCha20Rng::seed_from_u64(7));
        let b = GcnTrunk::init(&config, &mut ChaCha20Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn transform_round_trip() {
        for y in [0.5, 1.0, 42.0] {
            assert!((TargetTransform::Log.invert(TargetTransform::Log.apply(y)) - y).abs() < 1e-12);
            assert_eq!(TargetTransform::Identity.apply(y), y);
        }
    }
}
