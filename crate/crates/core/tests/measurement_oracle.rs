//! The aggregation pipeline against an independent, straight-from-prose
//! reimplementation of the trimming protocol.

use hwnas_core::measurement::{aggregate, RawSamples};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

/// Type-7 quantile, written independently of the library helper.
fn quantile_oracle(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Definitional oracle: discard samples outside [Q1, Q3], average every
/// `group` consecutive survivors, discard group averages outside their own
/// [Q1, Q3], then take the final average.
fn aggregate_oracle(samples: &[f64], group: usize) -> f64 {
    let q1 = quantile_oracle(samples, 0.25);
    let q3 = quantile_oracle(samples, 0.75);
    let survivors: Vec<f64> = samples.iter().copied().filter(|&s| (q1..=q3).contains(&s)).collect();
    let means: Vec<f64> = survivors
        .chunks(group)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let gq1 = quantile_oracle(&means, 0.25);
    let gq3 = quantile_oracle(&means, 0.75);
    let kept: Vec<f64> = means.into_iter().filter(|&m| (gq1..=gq3).contains(&m)).collect();
    kept.iter().sum::<f64>() / kept.len() as f64
}

#[test]
fn aggregate_matches_definitional_oracle_on_randomized_vectors() {
    let mut rng = ChaCha20Rng::seed_from_u64(606);
    for case in 0..1000 {
        // at least ~3 surviving groups so quartile trimming is meaningful
        let n = rng.random_range(60..400);
        let base: f64 = rng.random_range(0.5..20.0);
        let spread: f64 = rng.random_range(0.0..0.5);
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let noise: f64 = rng.random_range(-spread..=spread);
                // occasional positive outlier, as startup effects produce
                let outlier = if rng.random::<f64>() < 0.05 {
                    rng.random_range(0.0..10.0)
                } else {
                    0.0
                };
                (base * (1.0 + noise) + outlier).max(1e-6)
            })
            .collect();
        let agg = aggregate(&RawSamples::new(samples.clone())).unwrap();
        assert!(!agg.degenerate, "case {case} unexpectedly degenerate");
        let expected = aggregate_oracle(&samples, 10);
        assert!(
            (agg.mean_ms - expected).abs() <= 1e-12 * expected.abs().max(1.0),
            "case {case}: {} vs oracle {expected}",
            agg.mean_ms
        );
    }
}

#[test]
fn crafted_thousand_sample_vector_matches_oracle() {
    // mimics a measurement log: warm-up spikes, drift, periodic jitter
    let samples: Vec<f64> = (0..1000)
        .map(|i| {
            let warmup = if i < 12 { 8.0 - 0.6 * i as f64 } else { 0.0 };
            let drift = 3.0 + i as f64 * 2e-4;
            let jitter = 0.25 * ((i % 17) as f64 / 17.0 - 0.5);
            (drift + jitter + warmup.max(0.0)).max(1e-6)
        })
        .collect();
    let agg = aggregate(&RawSamples::new(samples.clone())).unwrap();
    let expected = aggregate_oracle(&samples, 10);
    assert!((agg.mean_ms - expected).abs() < 1e-12);
    assert!(agg.kept_fraction > 0.0 && agg.kept_fraction <= 1.0);
}

#[test]
fn two_distinct_groups_fall_back_with_a_flag() {
    // 20 survivors forming two groups with different means: the quartile
    // band excludes both, so the fallback keeps every group and flags it
    let mut samples = vec![1.0; 10];
    samples.extend(vec![1.2; 10]);
    let agg = aggregate(&RawSamples::new(samples)).unwrap();
    assert!(agg.degenerate);
    assert!((agg.mean_ms - 1.1).abs() < 1e-12);
}
