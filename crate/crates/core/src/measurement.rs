//! Latency sample aggregation and a small timing harness.
//!
//! Raw wall-clock samples go through a two-stage quartile trim: samples
//! outside the full set's [Q1, Q3] are discarded, survivors are averaged in
//! chronological groups, and group averages outside their own [Q1, Q3] are
//! discarded again before the final mean.

use std::io::{Read, Write};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::util::quantile;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("need at least {group_size} samples, got {got}")]
    TooFewSamples { group_size: usize, got: usize },
    #[error("samples must be positive")]
    NonPositiveSample,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Ordered wall-clock durations in milliseconds.
#[derive(Debug, Clone)]
pub struct RawSamples {
    pub samples: Vec<f64>,
    pub group_size: usize,
}

impl RawSamples {
    pub fn new(samples: Vec<f64>) -> Self {
        RawSamples {
            samples,
            group_size: 10,
        }
    }

    pub fn with_group_size(samples: Vec<f64>, group_size: usize) -> Self {
        RawSamples {
            samples,
            group_size,
        }
    }
}

/// Result of the trimming protocol.
#[derive(Debug, Clone, Serialize)]
pub struct AggregatedLatency {
    pub mean_ms: f64,
    /// Fraction of raw samples that contribute to the final mean.
    pub kept_fraction: f64,
    pub n_groups: usize,
    /// Set when trimming removed everything and the untrimmed mean was used.
    pub degenerate: bool,
}

/// Applies the quartile-trim / group-average / quartile-trim pipeline.
pub fn aggregate(raw: &RawSamples) -> Result<AggregatedLatency, MeasureError> {
    let n = raw.samples.len();
    if n < raw.group_size || n == 0 {
        return Err(MeasureError::TooFewSamples {
            group_size: raw.group_size,
            got: n,
        });
    }
    if raw.samples.iter().any(|&s| s <= 0.0) {
        return Err(MeasureError::NonPositiveSample);
    }

    // Stage 1: trim samples outside [Q1, Q3] of the full set (inclusive).
    let q1 = quantile(&raw.samples, 0.25);
    let q3 = quantile(&raw.samples, 0.75);
    let survivors: Vec<f64> = raw
        .samples
        .iter()
        .copied()
        .filter(|&s| s >= q1 && s <= q3)
        .collect();
    if survivors.is_empty() {
        return Ok(AggregatedLatency {
            mean_ms: raw.samples.iter().sum::<f64>() / n as f64,
            kept_fraction: 1.0,
            n_groups: 0,
            degenerate: true,
        });
    }

    // Stage 2: average chronological groups; a final partial group is
    // averaged as-is.
    let groups: Vec<(f64, usize)> = survivors
        .chunks(raw.group_size)
        .map(|c| (c.iter().sum::<f64>() / c.len() as f64, c.len()))
        .collect();

    // Stage 3: trim group averages outside their own [Q1, Q3]. With two
    // distinct averages the interpolated band excludes both; fall back to
    // keeping every group in that case.
    let means: Vec<f64> = groups.iter().map(|(m, _)| *m).collect();
    let gq1 = quantile(&means, 0.25);
    let gq3 = quantile(&means, 0.75);
    let mut degenerate = false;
    let mut kept: Vec<(f64, usize)> = groups
        .iter()
        .copied()
        .filter(|&(m, _)| m >= gq1 && m <= gq3)
        .collect();
    if kept.is_empty() {
        degenerate = true;
        kept = groups.clone();
    }

    // Stage 4: mean of surviving group averages.
    let mean_ms = kept.iter().map(|(m, _)| m).sum::<f64>() / kept.len() as f64;
    let kept_samples: usize = kept.iter().map(|(_, c)| c).sum();
    Ok(AggregatedLatency {
        mean_ms,
        kept_fraction: kept_samples as f64 / n as f64,
        n_groups: kept.len(),
        degenerate,
    })
}

/// Times `f` with a monotonic clock after `warmup` untimed invocations.
pub fn time_callable(mut f: impl FnMut(), runs: usize, warmup: usize) -> RawSamples {
    assert!(runs >= 1, "need at least one timed run");
    for _ in 0..warmup {
        f();
    }
    let samples = (0..runs)
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    RawSamples::new(samples)
}

/// One raw measurement row: (arch_id, device, sample in ms).
pub type SampleRow = (String, String, f64);

/// Writes raw samples as `arch_id,device,sample_ms` CSV.
pub fn write_samples_csv(rows: &[SampleRow], w: impl Write) -> Result<(), MeasureError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["arch_id", "device", "sample_ms"])?;
    for (arch, device, ms) in rows {
        wtr.write_record([arch.as_str(), device.as_str(), &ms.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads raw samples from `arch_id,device,sample_ms` CSV.
pub fn read_samples_csv(r: impl Read) -> Result<Vec<SampleRow>, MeasureError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let row: SampleRow = rec?;
        if row.2 <= 0.0 {
            return Err(MeasureError::NonPositiveSample);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_samples_keep_everything() {
        let raw = RawSamples::new(vec![5.0; 40]);
        let agg = aggregate(&raw).unwrap();
        assert_eq!(agg.mean_ms, 5.0);
        assert_eq!(agg.kept_fraction, 1.0);
        assert!(!agg.degenerate);
    }

    #[test]
    fn outlier_is_trimmed() {
        let mut samples = vec![1.0; 20];
        samples.push(100.0);
        let agg = aggregate(&RawSamples::new(samples)).unwrap();
        assert_eq!(agg.mean_ms, 1.0);
        assert!(agg.kept_fraction < 1.0);
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(matches!(
            aggregate(&RawSamples::new(vec![1.0; 5])),
            Err(MeasureError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn scale_equivariance() {
        let samples: Vec<f64> = (0..200).map(|i| 1.0 + (i % 17) as f64 * 0.3).collect();
        let base = aggregate(&RawSamples::new(samples.clone())).unwrap();
        for c in [0.5, 3.0, 1e3] {
            let scaled: Vec<f64> = samples.iter().map(|s| c * s).collect();
            let agg = aggregate(&RawSamples::new(scaled)).unwrap();
            assert_abs_diff_eq!(agg.mean_ms, c * base.mean_ms, epsilon = 1e-12 * c);
            assert_eq!(agg.kept_fraction, base.kept_fraction);
        }
    }

    #[test]
    fn group_size_one_is_permutation_invariant() {
        let samples: Vec<f64> = (0..50).map(|i| 1.0 + (i * 7 % 13) as f64).collect();
        let base = aggregate(&RawSamples::with_group_size(samples.clone(), 1)).unwrap();
        let mut reversed = samples;
        reversed.reverse();
        let agg = aggregate(&RawSamples::with_group_size(reversed, 1)).unwrap();
        assert_abs_diff_eq!(agg.mean_ms, base.mean_ms, epsilon = 1e-12);
    }

    #[test]
    fn mobile_variant_collapses_to_one_group() {
        let raw = RawSamples::with_group_size(vec![2.0; 10], 10);
        let agg = aggregate(&raw).unwrap();
        assert_eq!(agg.n_groups, 1);
        assert_eq!(agg.mean_ms, 2.0);
    }

    #[test]
    fn time_callable_returns_requested_runs() {
        let mut calls = 0usize;
        let raw = time_callable(
            || {
                calls += 1;
                std::hint::black_box((0..100).sum::<u64>());
            },
            3,
            2,
        );
        assert_eq!(raw.samples.len(), 3);
        assert_eq!(calls, 5, "warmup runs are executed but not recorded");
        assert!(raw.samples.iter().all(|&s| s >= 0.0 && s.is_finite()));
    }

    #[test]
    fn samples_csv_round_trip() {
        let rows = vec![
            ("a".to_string(), "cpu".to_string(), 1.25),
            ("b".to_string(), "gpu".to_string(), 0.5),
        ];
        let mut buf = Vec::new();
        write_samples_csv(&rows, &mut buf).unwrap();
        let back = read_samples_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }
}
