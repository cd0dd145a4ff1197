//! Aging evolution with single-op mutation.

use std::collections::{HashMap, VecDeque};

use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use super::{SearchConfig, SearchContext, SearchError, SearchResult, Tally};
use crate::space::{CellGraph, OpKind, Space, NB201_OPS, NB201_SLOTS};
use crate::util::derive_seed;

/// Aging-evolution knobs. Pool 64 / sample 16 are the values that work well
/// on this space; `cached` forbids training the same model twice.
#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub pool_size: usize,
    pub sample_size: usize,
    pub cached: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            pool_size: 64,
            sample_size: 16,
            cached: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.sample_size == 0 || self.pool_size == 0 {
            return Err(SearchError::Config("pool and sample must be positive".into()));
        }
        if self.sample_size > self.pool_size {
            return Err(SearchError::Config(
                "sample_size must not exceed pool_size".into(),
            ));
        }
        Ok(())
    }
}

/// Resamples one op slot to a different operation.
pub(crate) fn mutate_nb201(cell: &CellGraph, rng: &mut ChaCha20Rng) -> CellGraph {
    let mut ops: [OpKind; NB201_SLOTS] = cell
        .nodes
        .clone()
        .try_into()
        .expect("NB-201 cells have six op slots");
    let slot = rng.random_range(0..NB201_SLOTS);
    let alternatives: Vec<OpKind> = NB201_OPS
        .iter()
        .map(|(_, k)| *k)
        .filter(|k| *k != ops[slot])
        .collect();
    ops[slot] = alternatives[rng.random_range(0..alternatives.len())];
    CellGraph::nb201(ops).expect("mutated ops are valid")
}

/// Runs aging evolution until `total_m` models have been trained.
///
/// With a latency limit and predictions available, candidate generation
/// rejection-samples against the predictor; the incumbent still requires the
/// measured latency to pass. In cached mode re-encountered models reuse
/// their recorded accuracy without consuming training budget.
pub fn aging_evolution(
    ctx: &SearchContext<'_>,
    config: &SearchConfig,
    evo: &EvolutionConfig,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    evo.validate()?;
    if ctx.index.space != Space::Nb201 {
        return Err(SearchError::Config(
            "aging evolution mutates NB-201 op slots; other spaces are not supported".into(),
        ));
    }
    let candidates = ctx.candidate_ids(config.latency_limit);
    if candidates.is_empty() {
        return Err(SearchError::Infeasible(
            "no candidates survive the predicted-latency filter".into(),
        ));
    }
    let predicted_ok = |id: &str| match (config.latency_limit, ctx.predicted(id)) {
        (Some(limit), Some(pred)) => pred <= limit,
        _ => true,
    };

    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "evolution"));
    let mut tally = Tally::new(ctx, config);
    let mut pool: VecDeque<(String, f64)> = VecDeque::with_capacity(evo.pool_size);
    let mut cache: HashMap<String, f64> = HashMap::new();

    // initial pool: random predicted-feasible models
    while pool.len() < evo.pool_size && tally.count() < config.total_m {
        let id = candidates[rng.random_range(0..candidates.len())].clone();
        let acc = tally.train(&id)?;
        cache.insert(id.clone(), acc);
        pool.push_back((id, acc));
    }

    let step_cap = 50 * config.total_m.max(evo.pool_size);
    let mut steps = 0usize;
    while tally.count() < config.total_m && steps < step_cap {
        steps += 1;
        // sample without replacement; parent = best, ties by earliest index
        let sample = rand::seq::index::sample(&mut rng, pool.len(), evo.sample_size.min(pool.len()));
        let mut parent_idx = None;
        for idx in sample {
            let better = match parent_idx {
                None => true,
                Some(best) => {
                    pool[idx].1 > pool[best].1 || (pool[idx].1 == pool[best].1 && idx < best)
                }
            };
            if better {
                parent_idx = Some(idx);
            }
        }
        let parent_id = pool[parent_idx.expect("non-empty sample")].0.clone();
        let parent_cell = ctx
            .index
            .cell(&parent_id)
            .ok_or_else(|| SearchError::Config(format!("{parent_id:?} missing from index")))?;

        // mutate; under a constraint, retry against the predictor a few
        // times before accepting an infeasible child
        let mut child = mutate_nb201(parent_cell, &mut rng);
        for _ in 0..200 {
            if predicted_ok(&child.arch_id) {
                break;
            }
            child = mutate_nb201(parent_cell, &mut rng);
        }
        let child_id = child.arch_id;

        let accuracy = if evo.cached {
            match cache.get(&child_id) {
                Some(&acc) => acc, // no budget consumed
                None => {
                    let acc = tally.train(&child_id)?;
                    cache.insert(child_id.clone(), acc);
                    acc
                }
            }
        } else {
            let acc = tally.train(&child_id)?;
            cache.insert(child_id.clone(), acc);
            acc
        };

        pool.push_back((child_id, accuracy));
        if pool.len() > evo.pool_size {
            pool.pop_front();
        }
    }

    Ok(tally.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::parse_arch_string;
    use rand::SeedableRng;

    #[test]
    fn mutation_changes_exactly_one_slot() {
        let cell = parse_arch_string(
            "|nor_conv_3x3~0|+|none~0|nor_conv_3x3~1|+|skip_connect~0|none~1|nor_conv_1x1~2|",
        )
        .unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..100 {
            let child = mutate_nb201(&cell, &mut rng);
            let differing = cell
                .nodes
                .iter()
                .zip(&child.nodes)
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(differing, 1);
        }
    }
}
