//! Table types and ground-truth queries.

use std::collections::BTreeMap;

use rand::prelude::*;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::space::Space;

/// Ground truth for one architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkEntry {
    pub arch_id: String,
    /// Validation accuracy (%) per pseudo-seed; at least one.
    pub val_accuracy: Vec<f64>,
    /// Test accuracy (%) per pseudo-seed.
    pub test_accuracy: Vec<f64>,
    /// Mean latency in milliseconds per device; strictly positive.
    pub latency_ms: BTreeMap<String, f64>,
    pub flops: u64,
    pub params: u64,
}

impl BenchmarkEntry {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.val_accuracy.is_empty() {
            return Err(BenchError::Invalid(format!(
                "{}: no accuracy seeds",
                self.arch_id
            )));
        }
        let acc_ok = |v: &[f64]| v.iter().all(|a| (0.0..=100.0).contains(a));
        if !acc_ok(&self.val_accuracy) || !acc_ok(&self.test_accuracy) {
            return Err(BenchError::Invalid(format!(
                "{}: accuracy outside [0, 100]",
                self.arch_id
            )));
        }
        if self.latency_ms.values().any(|&l| !(l > 0.0)) {
            return Err(BenchError::Invalid(format!(
                "{}: non-positive latency",
                self.arch_id
            )));
        }
        Ok(())
    }
}

/// Which accuracy column a caller wants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccuracyKind {
    Validation,
    Test,
}

/// Seed handling when querying accuracy.
///
/// `FixedSeed` always returns the first stored seed (deterministic training
/// targets); `RandomSeed` samples uniformly among the stored seeds to mimic
/// training-noise variance during a search; `Mean` averages all seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccuracyMode {
    FixedSeed,
    RandomSeed,
    Mean,
}

/// Immutable ground-truth store for one search space.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTable {
    pub space: Space,
    pub entries: BTreeMap<String, BenchmarkEntry>,
    pub devices: Vec<String>,
    /// True when the table does not cover the whole space.
    pub partial: bool,
    /// Generator spec when the table is synthetic.
    pub generator: Option<super::SyntheticSpec>,
}

impl BenchmarkTable {
    pub fn entry(&self, arch_id: &str) -> Result<&BenchmarkEntry, BenchError> {
        self.entries
            .get(arch_id)
            .ok_or_else(|| BenchError::UnknownArch(arch_id.to_string()))
    }

    /// Accuracy in percent for the named architecture.
    pub fn query_accuracy(
        &self,
        arch_id: &str,
        kind: AccuracyKind,
        mode: AccuracyMode,
        rng: &mut impl Rng,
    ) -> Result<f64, BenchError> {
        let entry = self.entry(arch_id)?;
        let seeds = match kind {
            AccuracyKind::Validation => &entry.val_accuracy,
            AccuracyKind::Test => &entry.test_accuracy,
        };
        if seeds.is_empty() {
            return Err(BenchError::Invalid(format!("{arch_id}: no accuracy seeds")));
        }
        Ok(match mode {
            AccuracyMode::FixedSeed => seeds[0],
            AccuracyMode::RandomSeed => seeds[rng.random_range(0..seeds.len())],
            AccuracyMode::Mean => seeds.iter().sum::<f64>() / seeds.len() as f64,
        })
    }

    /// Stored mean latency in milliseconds.
    pub fn query_latency(&self, arch_id: &str, device: &str) -> Result<f64, BenchError> {
        let entry = self.entry(arch_id)?;
        entry
            .latency_ms
            .get(device)
            .copied()
            .ok_or_else(|| BenchError::UnknownDevice(device.to_string()))
    }

    pub fn query_flops(&self, arch_id: &str) -> Result<u64, BenchError> {
        Ok(self.entry(arch_id)?.flops)
    }

    /// Number of accuracy pseudo-seeds stored per entry.
    pub fn accuracy_seeds(&self) -> usize {
        self.entries
            .values()
            .next()
            .map(|e| e.val_accuracy.len())
            .unwrap_or(0)
    }

    pub fn arch_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let seeds = self.accuracy_seeds();
        for entry in self.entries.values() {
            entry.validate()?;
            if entry.val_accuracy.len() != seeds || entry.test_accuracy.len() != seeds {
                return Err(BenchError::Invalid(format!(
                    "{}: inconsistent seed count",
                    entry.arch_id
                )));
            }
            for device in &self.devices {
                if !entry.latency_ms.contains_key(device) {
                    return Err(BenchError::Invalid(format!(
                        "{}: missing latency for device {device:?}",
                        entry.arch_id
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn entry(seeds: Vec<f64>) -> BenchmarkEntry {
        BenchmarkEntry {
            arch_id: "a".into(),
            val_accuracy: seeds.clone(),
            test_accuracy: seeds,
            latency_ms: BTreeMap::from([("cpu".to_string(), 5.0)]),
            flops: 10,
            params: 4,
        }
    }

    fn table(e: BenchmarkEntry) -> BenchmarkTable {
        BenchmarkTable {
            space: Space::Nb201,
            entries: BTreeMap::from([(e.arch_id.clone(), e)]),
            devices: vec!["cpu".into()],
            partial: true,
            generator: None,
        }
    }

    #[test]
    fn accuracy_modes() {
        let t = table(entry(vec![90.0, 91.0]));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mean = t
            .query_accuracy("a", AccuracyKind::Validation, AccuracyMode::Mean, &mut rng)
            .unwrap();
        assert_eq!(mean, 90.5);
        let f1 = t
            .query_accuracy("a", AccuracyKind::Validation, AccuracyMode::FixedSeed, &mut rng)
            .unwrap();
        let f2 = t
            .query_accuracy("a", AccuracyKind::Validation, AccuracyMode::FixedSeed, &mut rng)
            .unwrap();
        assert_eq!(f1, f2);
        assert_eq!(f1, 90.0);
    }

    #[test]
    fn random_seed_draws_are_uniform() {
        let t = table(entry(vec![1.0, 2.0, 3.0, 4.0, 5.0]));
        let mut rng = ChaCha20Rng::seed_from_u64(123);
        let mut counts = [0usize; 5];
        let draws = 10_000;
        for _ in 0..draws {
            let v = t
                .query_accuracy("a", AccuracyKind::Validation, AccuracyMode::RandomSeed, &mut rng)
                .unwrap();
            counts[(v as usize) - 1] += 1;
        }
        let expected = draws as f64 / 5.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square critical value, df = 4, alpha = 0.01
        assert!(chi2 < 13.2767, "chi2 = {chi2}");
    }

    #[test]
    fn unknown_lookups_error() {
        let t = table(entry(vec![90.0]));
        assert!(matches!(
            t.query_latency("missing", "cpu"),
            Err(BenchError::UnknownArch(_))
        ));
        assert!(matches!(
            t.query_latency("a", "tpu"),
            Err(BenchError::UnknownDevice(_))
        ));
        assert_eq!(t.query_latency("a", "cpu").unwrap(), 5.0);
    }

    #[test]
    fn validation_rejects_bad_entries() {
        let mut e = entry(vec![90.0]);
        e.latency_ms.insert("cpu".into(), 0.0);
        assert!(table(e).validate().is_err());
        let e = entry(vec![]);
        assert!(table(e).validate().is_err());
    }
}
