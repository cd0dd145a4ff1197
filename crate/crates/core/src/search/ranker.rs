//! Candidate ranking backends for the predictor-based search.

use super::{SearchContext, SearchError};
use crate::bench::{AccuracyKind, BenchmarkTable};
use crate::gcn::TrainConfig;
use crate::predictors::{build_pair_dataset, rank_candidates, train_binary, BinaryPredictor};
use crate::space::EncodedGraph;
use crate::util::derive_seed;

/// Strategy that learns from the trained set and orders candidates
/// best-first. The production implementation wraps the binary relation
/// predictor; tests inject a ground-truth oracle.
pub trait RelationRanker {
    /// Incorporates the trained set (all models trained so far).
    fn update(
        &mut self,
        trained: &[(String, f64)],
        ctx: &SearchContext<'_>,
    ) -> Result<(), SearchError>;

    /// Orders candidate ids best-first.
    fn sort(
        &mut self,
        candidates: &[String],
        ctx: &SearchContext<'_>,
    ) -> Result<Vec<String>, SearchError>;
}

/// Binary relation predictor trained on all ordered pairs of the trained
/// set; weights carry over between updates.
pub struct BinaryPredictorRanker {
    pub predictor: BinaryPredictor,
    pub train: TrainConfig,
    seed: u64,
    rounds: u64,
}

impl BinaryPredictorRanker {
    pub fn new(predictor: BinaryPredictor, train: TrainConfig, seed: u64) -> Self {
        BinaryPredictorRanker {
            predictor,
            train,
            seed,
            rounds: 0,
        }
    }
}

impl RelationRanker for BinaryPredictorRanker {
    fn update(
        &mut self,
        trained: &[(String, f64)],
        ctx: &SearchContext<'_>,
    ) -> Result<(), SearchError> {
        let pairs = build_pair_dataset(trained)?;
        let graphs: Vec<&EncodedGraph> = trained
            .iter()
            .map(|(id, _)| {
                ctx.index
                    .graph(id)
                    .ok_or_else(|| SearchError::Config(format!("{id:?} missing from index")))
            })
            .collect::<Result<_, _>>()?;
        self.rounds += 1;
        let mut config = self.train.clone();
        config.rng_seed = derive_seed(self.seed, &format!("bp-train-{}", self.rounds));
        let result = train_binary(self.predictor.clone(), &graphs, &pairs, None, &config)?;
        self.predictor = result.predictor;
        Ok(())
    }

    fn sort(
        &mut self,
        candidates: &[String],
        ctx: &SearchContext<'_>,
    ) -> Result<Vec<String>, SearchError> {
        let graphs: Vec<&EncodedGraph> = candidates
            .iter()
            .map(|id| {
                ctx.index
                    .graph(id)
                    .ok_or_else(|| SearchError::Config(format!("{id:?} missing from index")))
            })
            .collect::<Result<_, _>>()?;
        let (order, _calls) = rank_candidates(&self.predictor, &graphs)?;
        Ok(order.into_iter().map(|i| candidates[i].clone()).collect())
    }
}

/// Ground-truth ranker: always sorts by the table's fixed-seed accuracy.
/// A stand-in for a perfectly antisymmetric, transitive relation.
pub struct OracleRanker<'a> {
    pub table: &'a BenchmarkTable,
    pub kind: AccuracyKind,
}

impl RelationRanker for OracleRanker<'_> {
    fn update(
        &mut self,
        _trained: &[(String, f64)],
        _ctx: &SearchContext<'_>,
    ) -> Result<(), SearchError> {
        Ok(())
    }

    fn sort(
        &mut self,
        candidates: &[String],
        _ctx: &SearchContext<'_>,
    ) -> Result<Vec<String>, SearchError> {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0);
        use rand::SeedableRng;
        let mut scored: Vec<(String, f64)> = candidates
            .iter()
            .map(|id| {
                let acc = self.table.query_accuracy(
                    id,
                    self.kind,
                    crate::bench::AccuracyMode::FixedSeed,
                    &mut rng,
                )?;
                Ok((id.clone(), acc))
            })
            .collect::<Result<_, SearchError>>()?;
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        Ok(scored.into_iter().map(|(id, _)| id).collect())
    }
}
