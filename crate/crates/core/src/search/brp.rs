//! Predictor-based search with iterative data selection.
//!
//! Per iteration i = 1..I the loop trains K/I models — the top α·K/I
//! untrained candidates of the current ordering plus (1−α)·K/I random
//! untrained picks from the top |C|/2^i stratum (iteration 1 is fully
//! random) — then retrains the relation predictor on all ordered pairs of
//! the trained set and re-sorts the candidates. A final phase walks the top
//! M−K untrained candidates, training those whose measured latency passes
//! the limit.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use super::ranker::{BinaryPredictorRanker, RelationRanker};
use super::{SearchConfig, SearchContext, SearchError, SearchResult, Tally};
use crate::predictors::{BinaryHead, BinaryPredictor};
use crate::util::derive_seed;

/// Runs the search with the standard binary-relation predictor.
pub fn brp_nas_search(
    ctx: &SearchContext<'_>,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let mut init_rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "bp-init"));
    let predictor = match &config.transfer_trunk {
        Some(trunk) => {
            BinaryPredictor::from_trunk(trunk.clone(), BinaryHead::Softmax2, &mut init_rng)
        }
        None => BinaryPredictor::init(&config.arch, BinaryHead::Softmax2, &mut init_rng),
    };
    let mut ranker = BinaryPredictorRanker::new(predictor, config.train.clone(), config.rng_seed);
    brp_nas_search_with_ranker(ctx, config, &mut ranker)
}

/// Same loop with an injected ranking strategy.
pub fn brp_nas_search_with_ranker(
    ctx: &SearchContext<'_>,
    config: &SearchConfig,
    ranker: &mut dyn RelationRanker,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let mut candidates = ctx.candidate_ids(config.latency_limit);
    if candidates.is_empty() {
        return Err(SearchError::Infeasible(
            "no candidates survive the predicted-latency filter".into(),
        ));
    }
    let mut select_rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "brp-select"));
    let mut tally = Tally::new(ctx, config);
    let per_iter = config.budget_k / config.iterations;
    let mut trained_ids: BTreeSet<String> = BTreeSet::new();

    for iteration in 1..=config.iterations {
        let selection = if iteration == 1 {
            sample_untrained(&candidates, &trained_ids, per_iter, &mut select_rng)
        } else {
            let n_top = (config.alpha * per_iter as f64).floor() as usize;
            let n_random = per_iter - n_top;
            let mut picked: Vec<String> = candidates
                .iter()
                .filter(|id| !trained_ids.contains(*id))
                .take(n_top)
                .cloned()
                .collect();
            // random picks come from the shrinking elite stratum
            let stratum_len = (candidates.len() >> iteration).max(1);
            let stratum = &candidates[..stratum_len.min(candidates.len())];
            let mut excluded: BTreeSet<&str> =
                trained_ids.iter().map(String::as_str).collect();
            excluded.extend(picked.iter().map(String::as_str));
            let mut pool: Vec<&String> =
                stratum.iter().filter(|id| !excluded.contains(id.as_str())).collect();
            if pool.len() < n_random {
                // stratum exhausted: fall back to the whole untrained list
                pool = candidates
                    .iter()
                    .filter(|id| !excluded.contains(id.as_str()))
                    .collect();
            }
            let take = n_random.min(pool.len());
            for idx in rand::seq::index::sample(&mut select_rng, pool.len(), take) {
                picked.push(pool[idx].clone());
            }
            picked
        };

        for arch_id in &selection {
            tally.train(arch_id)?;
            trained_ids.insert(arch_id.clone());
        }

        ranker.update(&tally.trained, ctx)?;
        candidates = ranker.sort(&candidates, ctx)?;
    }

    // Final phase: walk the top M−K untrained candidates; the measured
    // latency check precedes training, so infeasible ones consume their
    // candidate slot but no training budget.
    let final_slots = config.total_m - config.budget_k;
    let final_list: Vec<String> = candidates
        .iter()
        .filter(|id| !trained_ids.contains(*id))
        .take(final_slots)
        .cloned()
        .collect();
    for arch_id in &final_list {
        if tally.count() >= config.total_m {
            break;
        }
        if tally.is_feasible(arch_id)? {
            tally.train(arch_id)?;
            trained_ids.insert(arch_id.clone());
        }
    }

    Ok(tally.finish())
}

fn sample_untrained(
    candidates: &[String],
    trained: &BTreeSet<String>,
    count: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<String> {
    let pool: Vec<&String> = candidates.iter().filter(|id| !trained.contains(*id)).collect();
    let take = count.min(pool.len());
    rand::seq::index::sample(rng, pool.len(), take)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect()
}
