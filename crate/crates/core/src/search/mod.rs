//! Search algorithms over tabular benchmarks: binary-relation predictor
//! search with iterative data selection, aging evolution (plain and cached)
//! and random search, all under optional latency constraints.
//!
//! A latency predictor (when given) filters candidates up front; the
//! incumbent is only ever updated after the *measured* latency check, so a
//! constrained search can never report an infeasible model.

mod brp;
mod evolution;
mod random;
mod ranker;

pub use brp::{brp_nas_search, brp_nas_search_with_ranker};
pub use evolution::{aging_evolution, EvolutionConfig};
pub use random::random_search;
pub use ranker::{BinaryPredictorRanker, OracleRanker, RelationRanker};

use std::collections::BTreeMap;

use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bench::{AccuracyKind, AccuracyMode, BenchmarkTable};
use crate::gcn::{GcnConfig, GcnTrunk, TrainConfig};
use crate::space::CellIndex;
use crate::util::derive_seed;
use rand::SeedableRng;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search config error: {0}")]
    Config(String),
    #[error("infeasible constraint: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Bench(#[from] crate::bench::BenchError),
    #[error(transparent)]
    Predictor(#[from] crate::predictors::PredictorError),
    #[error(transparent)]
    Gcn(#[from] crate::gcn::GcnError),
}

/// Ground truth and candidate set shared by every algorithm.
pub struct SearchContext<'a> {
    pub table: &'a BenchmarkTable,
    pub index: &'a CellIndex,
    /// Predicted latency per arch id from a latency predictor, if any.
    pub predicted_latency: Option<&'a BTreeMap<String, f64>>,
}

impl<'a> SearchContext<'a> {
    pub fn new(table: &'a BenchmarkTable, index: &'a CellIndex) -> Self {
        SearchContext {
            table,
            index,
            predicted_latency: None,
        }
    }

    pub fn with_predictions(mut self, preds: &'a BTreeMap<String, f64>) -> Self {
        self.predicted_latency = Some(preds);
        self
    }

    fn predicted(&self, arch_id: &str) -> Option<f64> {
        self.predicted_latency.and_then(|m| m.get(arch_id)).copied()
    }

    /// Candidate ids surviving the predicted-latency filter, in index order.
    fn candidate_ids(&self, latency_limit: Option<f64>) -> Vec<String> {
        self.index
            .ids()
            .filter(|id| match (latency_limit, self.predicted(id)) {
                (Some(limit), Some(pred)) => pred <= limit,
                _ => true,
            })
            .map(str::to_string)
            .collect()
    }
}

/// Budgets and protocol knobs of one search run.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Predictor-training budget K (models).
    pub budget_k: usize,
    /// Iterations I of the data-selection loop; K must divide evenly.
    pub iterations: usize,
    /// Exploitation/exploration trade-off α ∈ [0, 1].
    pub alpha: f64,
    /// Overall trainable-model budget M ≥ K.
    pub total_m: usize,
    pub latency_limit: Option<f64>,
    /// Device for measured-latency feasibility checks.
    pub device: Option<String>,
    pub rng_seed: u64,
    pub accuracy_mode: AccuracyMode,
    pub accuracy_kind: AccuracyKind,
    /// Architecture of the relation predictor trained during the search.
    pub arch: GcnConfig,
    /// Training protocol for the relation predictor.
    pub train: TrainConfig,
    /// Optional transfer source for the relation predictor's trunk.
    pub transfer_trunk: Option<GcnTrunk>,
}

impl SearchConfig {
    /// Default budgets: K models over 5 iterations with α = 0.5.
    pub fn new(budget_k: usize, total_m: usize) -> Self {
        SearchConfig {
            budget_k,
            iterations: 5,
            alpha: 0.5,
            total_m,
            latency_limit: None,
            device: None,
            rng_seed: 0,
            accuracy_mode: AccuracyMode::FixedSeed,
            accuracy_kind: AccuracyKind::Validation,
            arch: GcnConfig::default(),
            train: TrainConfig::binary(budget_k),
            transfer_trunk: None,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.iterations == 0 || self.budget_k == 0 {
            return Err(SearchError::Config("budgets must be positive".into()));
        }
        if self.budget_k % self.iterations != 0 {
            return Err(SearchError::Config(format!(
                "K = {} must be divisible by I = {}",
                self.budget_k, self.iterations
            )));
        }
        if self.total_m < self.budget_k {
            return Err(SearchError::Config("M must be at least K".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SearchError::Config("alpha outside [0, 1]".into()));
        }
        if self.latency_limit.is_some() && self.device.is_none() {
            return Err(SearchError::Config(
                "a latency limit needs a device for measured checks".into(),
            ));
        }
        Ok(())
    }
}

/// One trained model in the event log.
#[derive(Debug, Clone, Serialize)]
pub struct SearchEvent {
    pub step: usize,
    pub arch_id: String,
    pub accuracy: f64,
    pub measured_latency: Option<f64>,
    pub predicted_latency: Option<f64>,
    pub feasible: bool,
    pub incumbent_arch: Option<String>,
    pub incumbent_accuracy: Option<f64>,
}

/// Outcome of a search run.
#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Best feasible model found, with the accuracy observed when trained.
    pub best: Option<(String, f64)>,
    /// (models trained, incumbent accuracy) per training once an incumbent
    /// exists; non-decreasing.
    pub trajectory: Vec<(usize, f64)>,
    /// Every trained model in training order.
    pub trained: Vec<(String, f64)>,
    pub events: Vec<SearchEvent>,
}

/// Shared bookkeeping: accuracy queries, feasibility checks, incumbent and
/// event-log updates.
struct Tally<'a> {
    ctx: &'a SearchContext<'a>,
    latency_limit: Option<f64>,
    device: Option<String>,
    accuracy_mode: AccuracyMode,
    accuracy_kind: AccuracyKind,
    acc_rng: ChaCha20Rng,
    trained: Vec<(String, f64)>,
    events: Vec<SearchEvent>,
    trajectory: Vec<(usize, f64)>,
    incumbent: Option<(String, f64)>,
}

impl<'a> Tally<'a> {
    fn new(ctx: &'a SearchContext<'a>, config: &SearchConfig) -> Self {
        Tally {
            ctx,
            latency_limit: config.latency_limit,
            device: config.device.clone(),
            accuracy_mode: config.accuracy_mode,
            accuracy_kind: config.accuracy_kind,
            acc_rng: ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "accuracy")),
            trained: Vec::new(),
            events: Vec::new(),
            trajectory: Vec::new(),
            incumbent: None,
        }
    }

    fn measured_latency(&self, arch_id: &str) -> Result<Option<f64>, SearchError> {
        match &self.device {
            Some(device) => Ok(Some(self.ctx.table.query_latency(arch_id, device)?)),
            None => Ok(None),
        }
    }

    /// True when the *measured* latency satisfies the limit.
    fn is_feasible(&self, arch_id: &str) -> Result<bool, SearchError> {
        match (self.latency_limit, self.measured_latency(arch_id)?) {
            (Some(limit), Some(lat)) => Ok(lat <= limit),
            (Some(_), None) => unreachable!("validate() requires a device with a limit"),
            (None, _) => Ok(true),
        }
    }

    /// Trains (queries) one model, updating incumbent and logs.
    fn train(&mut self, arch_id: &str) -> Result<f64, SearchError> {
        let accuracy = self.ctx.table.query_accuracy(
            arch_id,
            self.accuracy_kind,
            self.accuracy_mode,
            &mut self.acc_rng,
        )?;
        let feasible = self.is_feasible(arch_id)?;
        self.trained.push((arch_id.to_string(), accuracy));
        if feasible {
            let better = self
                .incumbent
                .as_ref()
                .map(|(_, best)| accuracy > *best)
                .unwrap_or(true);
            if better {
                self.incumbent = Some((arch_id.to_string(), accuracy));
            }
        }
        let step = self.trained.len();
        if let Some((_, acc)) = &self.incumbent {
            self.trajectory.push((step, *acc));
        }
        self.events.push(SearchEvent {
            step,
            arch_id: arch_id.to_string(),
            accuracy,
            measured_latency: self.measured_latency(arch_id)?,
            predicted_latency: self.ctx.predicted(arch_id),
            feasible,
            incumbent_arch: self.incumbent.as_ref().map(|(a, _)| a.clone()),
            incumbent_accuracy: self.incumbent.as_ref().map(|(_, a)| *a),
        });
        Ok(accuracy)
    }

    fn count(&self) -> usize {
        self.trained.len()
    }

    fn finish(self) -> SearchResult {
        SearchResult {
            best: self.incumbent,
            trajectory: self.trajectory,
            trained: self.trained,
            events: self.events,
        }
    }
}
