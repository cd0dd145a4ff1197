//! Metrics and report generators: error bounds, rank correlation, Pareto
//! fronts, oracle-search error accounting and relation diagnostics.

use serde::Serialize;
use thiserror::Error;

use crate::util::quantile;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
}

/// Fractions of predictions within relative error bounds.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBoundReport {
    pub bounds: Vec<f64>,
    pub fraction_within: Vec<f64>,
}

/// Standard bounds used throughout: ±1%, ±5%, ±10%.
pub const DEFAULT_BOUNDS: [f64; 3] = [0.01, 0.05, 0.10];

/// Per-bound fraction of predictions with |pred - meas| / meas <= bound.
pub fn error_bound_report(
    preds: &[f64],
    measures: &[f64],
    bounds: &[f64],
) -> Result<ErrorBoundReport, AnalysisError> {
    if preds.len() != measures.len() {
        return Err(AnalysisError::Usage(format!(
            "length mismatch: {} predictions vs {} measurements",
            preds.len(),
            measures.len()
        )));
    }
    if preds.is_empty() {
        return Err(AnalysisError::Usage("empty prediction vector".into()));
    }
    if measures.iter().any(|&m| m <= 0.0) {
        return Err(AnalysisError::Usage("measurements must be positive".into()));
    }
    let n = preds.len() as f64;
    let fraction_within = bounds
        .iter()
        .map(|&b| {
            let within = preds
                .iter()
                .zip(measures)
                .filter(|(p, m)| ((*p - *m) / *m).abs() <= b)
                .count();
            within as f64 / n
        })
        .collect();
    Ok(ErrorBoundReport {
        bounds: bounds.to_vec(),
        fraction_within,
    })
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("NaN in rank input"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::Usage("length mismatch".into()));
    }
    if xs.len() < 2 {
        return Err(AnalysisError::Usage("need at least two observations".into()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::UndefinedCorrelation(
            "an input vector is constant".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// A candidate point for Pareto analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub arch_id: String,
    pub accuracy: f64,
    pub latency: f64,
}

/// Maximal non-dominated set under (maximize accuracy, minimize latency).
///
/// Points with identical coordinates are all retained when non-dominated.
/// Input order is preserved within the front.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .latency
            .partial_cmp(&points[b].latency)
            .unwrap()
            .then(points[b].accuracy.partial_cmp(&points[a].accuracy).unwrap())
    });
    let mut keep = vec![false; points.len()];
    let mut best_acc_strictly_faster = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // group of equal latency
        let mut j = i;
        while j + 1 < order.len() && points[order[j + 1]].latency == points[order[i]].latency {
            j += 1;
        }
        let group_max = points[order[i]].accuracy;
        if group_max > best_acc_strictly_faster {
            for &k in &order[i..=j] {
                if points[k].accuracy == group_max {
                    keep[k] = true;
                }
            }
        }
        best_acc_strictly_faster = best_acc_strictly_faster.max(group_max);
        i = j + 1;
    }
    points
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(p, _)| p.clone())
        .collect()
}

/// Per-model data for oracle-search analysis.
#[derive(Debug, Clone)]
pub struct OracleInput {
    pub arch_id: String,
    pub accuracy: f64,
    pub measured: f64,
    pub predicted: f64,
}

/// Error accounting of an idealized search constrained by predicted latency.
///
/// "Positive" means strictly below the threshold; boundary values count as
/// negative so the four sets partition the space.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub threshold: f64,
    pub n_false_pos: usize,
    pub n_false_neg: usize,
    pub n_true_pos: usize,
    pub n_true_neg: usize,
    /// Accuracy argmax over predicted-feasible models (false + true positives).
    pub assumed_best: Option<String>,
    /// Accuracy argmax over true positives.
    pub effective_best: Option<String>,
    /// Accuracy argmax over truly feasible models.
    pub ground_truth_best: Option<String>,
    pub missed_accuracy: Option<f64>,
    pub overclaimed_accuracy: Option<f64>,
    pub miss_latency_error: Option<f64>,
    pub overclaim_latency_error: Option<f64>,
    /// True when no model is truly feasible at this threshold.
    pub infeasible: bool,
}

fn argmax_accuracy<'a>(
    models: impl Iterator<Item = &'a OracleInput>,
) -> Option<&'a OracleInput> {
    models.reduce(|best, m| {
        let better = m.accuracy > best.accuracy
            || (m.accuracy == best.accuracy && m.measured < best.measured)
            || (m.accuracy == best.accuracy
                && m.measured == best.measured
                && m.arch_id < best.arch_id);
        if better {
            m
        } else {
            best
        }
    })
}

/// Runs the oracle-search error accounting at each threshold.
pub fn oracle_nas_analysis(models: &[OracleInput], thresholds: &[f64]) -> Vec<OracleReport> {
    thresholds
        .iter()
        .map(|&th| {
            let fp = models.iter().filter(|m| m.predicted < th && m.measured >= th);
            let fns = models.iter().filter(|m| m.predicted >= th && m.measured < th);
            let tp = models.iter().filter(|m| m.predicted < th && m.measured < th);
            let tn = models.iter().filter(|m| m.predicted >= th && m.measured >= th);
            let n_false_pos = fp.clone().count();
            let n_false_neg = fns.count();
            let n_true_pos = tp.clone().count();
            let n_true_neg = tn.count();

            let assumed = argmax_accuracy(fp.chain(tp.clone()));
            let effective = argmax_accuracy(tp);
            let ground = argmax_accuracy(models.iter().filter(|m| m.measured < th));
            let infeasible = ground.is_none();

            let missed_accuracy = match (ground, effective) {
                (Some(g), Some(e)) => Some(g.accuracy - e.accuracy),
                _ => None,
            };
            let overclaimed_accuracy = match (assumed, effective) {
                (Some(a), Some(e)) => Some(a.accuracy - e.accuracy),
                _ => None,
            };
            let miss_latency_error = match (ground, effective) {
                (Some(g), Some(e)) => Some(if g.arch_id != e.arch_id {
                    g.predicted - g.measured
                } else {
                    0.0
                }),
                _ => None,
            };
            let overclaim_latency_error = match (assumed, effective) {
                (Some(a), Some(e)) => Some(if a.arch_id != e.arch_id {
                    a.predicted - a.measured
                } else {
                    0.0
                }),
                _ => None,
            };

            OracleReport {
                threshold: th,
                n_false_pos,
                n_false_neg,
                n_true_pos,
                n_true_neg,
                assumed_best: assumed.map(|m| m.arch_id.clone()),
                effective_best: effective.map(|m| m.arch_id.clone()),
                ground_truth_best: ground.map(|m| m.arch_id.clone()),
                missed_accuracy,
                overclaimed_accuracy,
                miss_latency_error,
                overclaim_latency_error,
                infeasible,
            }
        })
        .collect()
}

/// Fraction of unordered pairs ranked consistently in both query orders.
///
/// `p1(i, j)` is the predicted probability that model `i` beats model `j`.
/// An exact 0.5 in either direction counts as a violation.
pub fn antisymmetry_rate(
    mut p1: impl FnMut(usize, usize) -> f64,
    pairs: &[(usize, usize)],
) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let consistent = pairs
        .iter()
        .filter(|&&(a, b)| {
            let fwd = p1(a, b) - 0.5;
            let bwd = p1(b, a) - 0.5;
            fwd != 0.0 && bwd != 0.0 && (fwd > 0.0) != (bwd > 0.0)
        })
        .count();
    consistent as f64 / pairs.len() as f64
}

/// Simple-cycle count of a comparator-induced tournament digraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleCount {
    pub count: u64,
    pub saturated: bool,
}

/// Counts simple cycles with a bounded Johnson-style enumeration.
///
/// `edge(i, j)` tells whether the digraph has an edge i→j; enumeration stops
/// once `cutoff` cycles are found and the result is flagged saturated.
pub fn cycle_probe(n: usize, edge: impl Fn(usize, usize) -> bool, cutoff: u64) -> CycleCount {
    assert!(cutoff >= 1, "cutoff must be at least 1");
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && edge(i, j)).collect())
        .collect();
    let mut count = 0u64;

    // Cycles are counted once, rooted at their minimal vertex.
    for start in 0..n {
        let mut blocked = vec![false; n];
        let mut block_map: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut stack = Vec::new();
        if circuit(
            start,
            start,
            &adj,
            &mut blocked,
            &mut block_map,
            &mut stack,
            &mut count,
            cutoff,
        ) && count >= cutoff
        {
            return CycleCount {
                count,
                saturated: true,
            };
        }
    }
    CycleCount {
        count,
        saturated: false,
    }
}

#[allow(clippy::too_many_arguments)]
fn circuit(
    v: usize,
    start: usize,
    adj: &[Vec<usize>],
    blocked: &mut [bool],
    block_map: &mut [Vec<usize>],
    stack: &mut Vec<usize>,
    count: &mut u64,
    cutoff: u64,
) -> bool {
    let mut found = false;
    stack.push(v);
    blocked[v] = true;
    for &w in &adj[v] {
        if w < start {
            continue;
        }
        if w == start {
            *count += 1;
            found = true;
            if *count >= cutoff {
                return true;
            }
        } else if !blocked[w]
            && circuit(w, start, adj, blocked, block_map, stack, count, cutoff)
        {
            found = true;
            if *count >= cutoff {
                return true;
            }
        }
    }
    if found {
        unblock(v, blocked, block_map);
    } else {
        for &w in &adj[v] {
            if w >= start && !block_map[w].contains(&v) {
                block_map[w].push(v);
            }
        }
    }
    stack.pop();
    found
}

fn unblock(v: usize, blocked: &mut [bool], block_map: &mut [Vec<usize>]) {
    blocked[v] = false;
    let waiting = std::mem::take(&mut block_map[v]);
    for w in waiting {
        if blocked[w] {
            unblock(w, blocked, block_map);
        }
    }
}

/// Per-step median and interquartile band over several search trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryBands {
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
}

/// Aggregates incumbent-accuracy series; shorter runs are padded with their
/// last value.
pub fn trajectory_aggregate(runs: &[Vec<f64>]) -> Result<TrajectoryBands, AnalysisError> {
    if runs.is_empty() {
        return Err(AnalysisError::Usage("no trajectories given".into()));
    }
    if runs.iter().any(|r| r.is_empty()) {
        return Err(AnalysisError::Usage("empty trajectory".into()));
    }
    let len = runs.iter().map(Vec::len).max().unwrap();
    let mut median = Vec::with_capacity(len);
    let mut q25 = Vec::with_capacity(len);
    let mut q75 = Vec::with_capacity(len);
    for step in 0..len {
        let values: Vec<f64> = runs
            .iter()
            .map(|r| *r.get(step).unwrap_or_else(|| r.last().unwrap()))
            .collect();
        median.push(quantile(&values, 0.5));
        q25.push(quantile(&values, 0.25));
        q75.push(quantile(&values, 0.75));
    }
    Ok(TrajectoryBands { median, q25, q75 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn error_bounds_trivial_cases() {
        let meas = vec![1.0, 2.0, 4.0];
        let exact = error_bound_report(&meas, &meas, &DEFAULT_BOUNDS).unwrap();
        assert_eq!(exact.fraction_within, vec![1.0, 1.0, 1.0]);
        let off: Vec<f64> = meas.iter().map(|m| 1.2 * m).collect();
        let r = error_bound_report(&off, &meas, &DEFAULT_BOUNDS).unwrap();
        assert_eq!(r.fraction_within, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn error_bounds_match_recount() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let meas: Vec<f64> = (0..500).map(|_| rng.random_range(0.5..10.0)).collect();
        let preds: Vec<f64> = meas
            .iter()
            .map(|m| m * rng.random_range(0.85..1.15))
            .collect();
        let r = error_bound_report(&preds, &meas, &DEFAULT_BOUNDS).unwrap();
        for (bi, &b) in DEFAULT_BOUNDS.iter().enumerate() {
            let mut within = 0usize;
            for i in 0..meas.len() {
                if ((preds[i] - meas[i]) / meas[i]).abs() <= b {
                    within += 1;
                }
            }
            assert_eq!(r.fraction_within[bi], within as f64 / meas.len() as f64);
        }
        // monotone in the bound
        assert!(r.fraction_within[0] <= r.fraction_within[1]);
        assert!(r.fraction_within[1] <= r.fraction_within[2]);
    }

    #[test]
    fn spearman_extremes_and_ties() {
        let xs = vec![1.0, 2.0, 3.0, 4.0];
        let ys = vec![10.0, 20.0, 30.0, 40.0];
        assert_abs_diff_eq!(spearman(&xs, &ys).unwrap(), 1.0, epsilon = 1e-12);
        let rev: Vec<f64> = ys.iter().rev().copied().collect();
        assert_abs_diff_eq!(spearman(&xs, &rev).unwrap(), -1.0, epsilon = 1e-12);
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(AnalysisError::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn spearman_with_ties_matches_pearson_on_ranks() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..20 {
            let xs: Vec<f64> = (0..40).map(|_| rng.random_range(0..8) as f64).collect();
            let ys: Vec<f64> = (0..40).map(|_| rng.random_range(0..8) as f64).collect();
            let (Ok(s), rx, ry) = (spearman(&xs, &ys), average_ranks(&xs), average_ranks(&ys))
            else {
                continue;
            };
            let oracle = pearson(&rx, &ry).unwrap();
            assert_abs_diff_eq!(s, oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn spearman_invariant_under_monotone_transform() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let xs: Vec<f64> = (0..50).map(|_| rng.random_range(0.1..5.0)).collect();
        let ys: Vec<f64> = (0..50).map(|_| rng.random_range(0.1..5.0)).collect();
        let base = spearman(&xs, &ys).unwrap();
        let xt: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        let yt: Vec<f64> = ys.iter().map(|y| y.ln() * 3.0 + 1.0).collect();
        assert_abs_diff_eq!(spearman(&xt, &yt).unwrap(), base, epsilon = 1e-12);
    }

    fn pt(id: &str, acc: f64, lat: f64) -> ParetoPoint {
        ParetoPoint {
            arch_id: id.into(),
            accuracy: acc,
            latency: lat,
        }
    }

    #[test]
    fn pareto_trivial_cases() {
        let single = vec![pt("a", 1.0, 1.0)];
        assert_eq!(pareto_front(&single), single);
        let two = vec![pt("a", 2.0, 1.0), pt("b", 1.0, 2.0)];
        assert_eq!(pareto_front(&two).len(), 1);
        let ties = vec![pt("a", 1.0, 1.0), pt("b", 1.0, 1.0)];
        assert_eq!(pareto_front(&ties).len(), 2);
    }

    fn pareto_oracle(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
        points
            .iter()
            .filter(|p| {
                !points.iter().any(|q| {
                    q.accuracy >= p.accuracy
                        && q.latency <= p.latency
                        && (q.accuracy > p.accuracy || q.latency < p.latency)
                })
            })
            .cloned()
            .collect()
    }

    #[test]
    fn pareto_matches_quadratic_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        let points: Vec<ParetoPoint> = (0..1000)
            .map(|i| {
                pt(
                    &format!("m{i}"),
                    rng.random_range(0..50) as f64 / 2.0,
                    rng.random_range(0..50) as f64 / 4.0,
                )
            })
            .collect();
        let mut fast = pareto_front(&points);
        let mut slow = pareto_oracle(&points);
        let key = |p: &ParetoPoint| p.arch_id.clone();
        fast.sort_by_key(key);
        slow.sort_by_key(key);
        assert_eq!(fast, slow);
    }

    #[test]
    fn pareto_idempotent() {
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        let points: Vec<ParetoPoint> = (0..200)
            .map(|i| {
                pt(
                    &format!("m{i}"),
                    rng.random_range(0.0..10.0),
                    rng.random_range(0.0..10.0),
                )
            })
            .collect();
        let once = pareto_front(&points);
        let twice = pareto_front(&once);
        assert_eq!(once, twice);
    }

    fn oracle_models(n: usize, seed: u64, perfect: bool) -> Vec<OracleInput> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let measured = rng.random_range(1.0..8.0);
                let predicted = if perfect {
                    measured
                } else {
                    measured * rng.random_range(0.7..1.3)
                };
                OracleInput {
                    arch_id: format!("m{i}"),
                    accuracy: rng.random_range(50.0..95.0),
                    measured,
                    predicted,
                }
            })
            .collect()
    }

    #[test]
    fn oracle_with_perfect_predictor_is_exact() {
        let models = oracle_models(300, 23, true);
        let thresholds: Vec<f64> = (10..=70).map(|i| i as f64 / 10.0).collect();
        for report in oracle_nas_analysis(&models, &thresholds) {
            assert_eq!(report.n_false_pos, 0);
            assert_eq!(report.n_false_neg, 0);
            if !report.infeasible {
                assert_eq!(report.missed_accuracy, Some(0.0));
                assert_eq!(report.overclaimed_accuracy, Some(0.0));
                assert_eq!(report.effective_best, report.ground_truth_best);
            }
        }
    }

    #[test]
    fn oracle_unconstrained_limit_finds_global_best() {
        let models = oracle_models(100, 29, false);
        let global_best = models
            .iter()
            .max_by(|a, b| a.accuracy.partial_cmp(&b.accuracy).unwrap())
            .unwrap();
        let report = &oracle_nas_analysis(&models, &[1e9])[0];
        assert_eq!(report.ground_truth_best.as_deref(), Some(global_best.arch_id.as_str()));
        assert_eq!(report.n_true_pos + report.n_false_neg, models.len());
    }

    #[test]
    fn oracle_counts_partition_space() {
        let models = oracle_models(200, 31, false);
        for report in oracle_nas_analysis(&models, &[2.0, 4.0, 6.0]) {
            assert_eq!(
                report.n_false_pos + report.n_false_neg + report.n_true_pos + report.n_true_neg,
                models.len()
            );
            if let (Some(m), Some(o)) = (report.missed_accuracy, report.overclaimed_accuracy) {
                assert!(m >= 0.0);
                assert!(o >= 0.0);
            }
        }
    }

    #[test]
    fn oracle_infeasible_threshold_flagged() {
        let models = oracle_models(50, 37, false);
        let report = &oracle_nas_analysis(&models, &[0.0])[0];
        assert!(report.infeasible);
        assert!(report.ground_truth_best.is_none());
    }

    #[test]
    fn antisymmetry_extremes() {
        let pairs: Vec<(usize, usize)> = (0..10).flat_map(|a| (a + 1..10).map(move |b| (a, b))).collect();
        // exact ties everywhere -> rate 0
        assert_eq!(antisymmetry_rate(|_, _| 0.5, &pairs), 0.0);
        // oracle comparator -> rate 1
        assert_eq!(
            antisymmetry_rate(|a, b| if a < b { 0.9 } else { 0.1 }, &pairs),
            1.0
        );
    }

    #[test]
    fn cycle_probe_transitive_oracle_has_no_cycles() {
        let res = cycle_probe(8, |a, b| a < b, 1_000);
        assert_eq!(res.count, 0);
        assert!(!res.saturated);
    }

    #[test]
    fn cycle_probe_rock_paper_scissors() {
        // 0 beats 1, 1 beats 2, 2 beats 0
        let edge = |a: usize, b: usize| matches!((a, b), (0, 1) | (1, 2) | (2, 0));
        let res = cycle_probe(3, edge, 1_000);
        assert_eq!(res.count, 1);
        assert!(!res.saturated);
    }

    #[test]
    fn cycle_probe_saturates_at_cutoff() {
        // complete digraph on 7 nodes has far more than 10 simple cycles
        let res = cycle_probe(7, |a, b| a != b, 10);
        assert_eq!(res.count, 10);
        assert!(res.saturated);
    }

    #[test]
    fn cycle_probe_counts_two_cycles() {
        let edge = |a: usize, b: usize| matches!((a, b), (0, 1) | (1, 0));
        let res = cycle_probe(2, edge, 100);
        assert_eq!(res.count, 1);
    }

    #[test]
    fn trajectory_aggregate_collapses_for_single_run() {
        let run = vec![1.0, 2.0, 3.0];
        let bands = trajectory_aggregate(std::slice::from_ref(&run)).unwrap();
        assert_eq!(bands.median, run);
        assert_eq!(bands.q25, run);
        assert_eq!(bands.q75, run);
    }

    #[test]
    fn trajectory_aggregate_matches_sort_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(41);
        let runs: Vec<Vec<f64>> = (0..9)
            .map(|_| {
                let mut acc: f64 = 0.0;
                (0..20)
                    .map(|_| {
                        acc += rng.random_range(0.0..1.0);
                        acc
                    })
                    .collect()
            })
            .collect();
        let bands = trajectory_aggregate(&runs).unwrap();
        for step in 0..20 {
            let mut vals: Vec<f64> = runs.iter().map(|r| r[step]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_abs_diff_eq!(bands.median[step], quantile(&vals, 0.5), epsilon = 1e-12);
            assert_abs_diff_eq!(bands.q25[step], quantile(&vals, 0.25), epsilon = 1e-12);
            assert_abs_diff_eq!(bands.q75[step], quantile(&vals, 0.75), epsilon = 1e-12);
        }
    }

    #[test]
    fn trajectory_aggregate_pads_with_last_value() {
        let runs = vec![vec![1.0, 5.0], vec![3.0]];
        let bands = trajectory_aggregate(&runs).unwrap();
        assert_eq!(bands.median, vec![2.0, 4.0]);
    }
}
