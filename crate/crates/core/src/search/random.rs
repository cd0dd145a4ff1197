//! Uniform random search with replacement.

use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

use super::{SearchConfig, SearchContext, SearchError, SearchResult, Tally};
use crate::util::derive_seed;

/// Trains `total_m` uniform draws (with replacement) from the whole space;
/// the incumbent only updates when the measured latency passes the limit.
pub fn random_search(
    ctx: &SearchContext<'_>,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    let ids: Vec<&str> = ctx.index.ids().collect();
    if ids.is_empty() {
        return Err(SearchError::Infeasible("empty search space".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(config.rng_seed, "random-search"));
    let mut tally = Tally::new(ctx, config);
    for _ in 0..config.total_m {
        let id = ids[rng.random_range(0..ids.len())];
        tally.train(id)?;
    }
    Ok(tally.finish())
}
