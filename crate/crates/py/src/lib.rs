//! Python bindings: cells and encodings, synthetic benchmarks, predictors,
//! searches and the analysis helpers.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use hwnas_core::analysis;
use hwnas_core::bench::{
    load_table, save_table, synth_table, AccuracyKind, AccuracyMode, BenchmarkTable, SyntheticSpec,
};
use hwnas_core::gcn::{train_unary, GcnConfig, TargetTransform, TrainConfig};
use hwnas_core::measurement::{aggregate, RawSamples};
use hwnas_core::predictors::{
    build_pair_dataset, rank_candidates, train_binary, BinaryHead, BinaryPredictor,
};
use hwnas_core::search::{
    aging_evolution, brp_nas_search, random_search, EvolutionConfig, SearchConfig, SearchContext,
};
use hwnas_core::space::{
    encode, enumerate_space, parse_arch_string, CellIndex, EncodedGraph, Space,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

/// Operation names of a parsed NB-201 architecture string, in slot order.
#[pyfunction]
fn parse_arch(s: &str) -> PyResult<Vec<String>> {
    let cell = parse_arch_string(s).map_err(value_err)?;
    Ok(cell.nodes.iter().map(|op| format!("{op:?}")).collect())
}

fn matrix_rows(m: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
}

/// Adjacency and one-hot feature matrices of an NB-201 architecture.
#[pyfunction]
fn encode_arch(s: &str) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let cell = parse_arch_string(s).map_err(value_err)?;
    let g = encode(&cell);
    Ok((matrix_rows(&g.adjacency), matrix_rows(&g.features)))
}

/// All NB-201 architecture strings in enumeration order (optionally capped).
#[pyfunction]
#[pyo3(signature = (limit=None))]
fn enumerate_nb201(limit: Option<usize>) -> PyResult<Vec<String>> {
    let iter = enumerate_space(Space::Nb201).map_err(value_err)?;
    let ids = iter.map(|c| c.arch_id);
    Ok(match limit {
        Some(n) => ids.take(n).collect(),
        None => ids.collect(),
    })
}

/// A benchmark table plus its cell index.
#[pyclass]
struct Table {
    table: BenchmarkTable,
    index: CellIndex,
}

impl Table {
    fn from_table(table: BenchmarkTable) -> PyResult<Self> {
        let index = match table.space {
            Space::Nb201 => {
                CellIndex::from_nb201_ids(table.arch_ids()).map_err(value_err)?
            }
            Space::Nb101 => {
                return Err(PyValueError::new_err(
                    "NB-101 tables need the cell list; build them through the Rust API",
                ))
            }
        };
        Ok(Table { table, index })
    }

    fn graphs_for(&self, ids: &[String]) -> PyResult<Vec<&EncodedGraph>> {
        ids.iter()
            .map(|id| {
                self.index
                    .graph(id)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown arch {id:?}")))
            })
            .collect()
    }
}

#[pymethods]
impl Table {
    /// Deterministic synthetic NB-201 table with the default device profiles.
    #[staticmethod]
    #[pyo3(signature = (seed=2020, noise_sd=0.3))]
    fn synthetic(seed: u64, noise_sd: f64) -> PyResult<Self> {
        let spec = SyntheticSpec {
            seed,
            noise_sd,
            ..SyntheticSpec::default()
        };
        Table::from_table(synth_table(&spec, Space::Nb201).map_err(value_err)?)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Table::from_table(load_table(&path).map_err(io_err)?)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_table(&self.table, &path).map_err(io_err)
    }

    fn __len__(&self) -> usize {
        self.table.entries.len()
    }

    fn devices(&self) -> Vec<String> {
        self.table.devices.clone()
    }

    fn arch_ids(&self) -> Vec<String> {
        self.table.arch_ids().map(str::to_string).collect()
    }

    /// Accuracy in percent. kind: "validation" | "test"; mode: "fixed" |
    /// "mean" | "random" (with `seed`).
    #[pyo3(signature = (arch_id, kind="validation", mode="fixed", seed=0))]
    fn accuracy(&self, arch_id: &str, kind: &str, mode: &str, seed: u64) -> PyResult<f64> {
        let kind = match kind {
            "validation" => AccuracyKind::Validation,
            "test" => AccuracyKind::Test,
            other => return Err(PyValueError::new_err(format!("unknown kind {other:?}"))),
        };
        let mode = match mode {
            "fixed" => AccuracyMode::FixedSeed,
            "mean" => AccuracyMode::Mean,
            "random" => AccuracyMode::RandomSeed,
            other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
        };
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        self.table
            .query_accuracy(arch_id, kind, mode, &mut rng)
            .map_err(value_err)
    }

    fn latency(&self, arch_id: &str, device: &str) -> PyResult<f64> {
        self.table.query_latency(arch_id, device).map_err(value_err)
    }

    fn flops(&self, arch_id: &str) -> PyResult<u64> {
        self.table.query_flops(arch_id).map_err(value_err)
    }
}

/// A unary GCN predictor (latency or accuracy).
#[pyclass]
struct Predictor {
    model: hwnas_core::gcn::GcnModel,
}

#[pymethods]
impl Predictor {
    /// Trains a latency predictor on `train_size` random models.
    #[staticmethod]
    #[pyo3(signature = (table, device, train_size=900, val_size=100, epochs=60, hidden=vec![600, 600, 600, 600], seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn train_latency(
        table: &Table,
        device: &str,
        train_size: usize,
        val_size: usize,
        epochs: usize,
        hidden: Vec<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let ids: Vec<&str> = table.table.arch_ids().collect();
        let (train_ids, val_ids, _) =
            hwnas_core::predictors::split_ids(&ids, train_size, val_size, seed)
                .map_err(value_err)?;
        let collect = |ids: &[String]| -> PyResult<Vec<(EncodedGraph, f64)>> {
            ids.iter()
                .map(|id| {
                    let g = table
                        .index
                        .graph(id)
                        .ok_or_else(|| PyValueError::new_err(format!("unknown arch {id:?}")))?
                        .clone();
                    let lat = table.table.query_latency(id, device).map_err(value_err)?;
                    Ok((g, lat))
                })
                .collect()
        };
        let train_set = collect(&train_ids)?;
        let val_set = collect(&val_ids)?;
        let arch = GcnConfig {
            input_dim: hwnas_core::space::FEATURE_DIM,
            hidden,
        };
        let config = TrainConfig {
            max_epochs: epochs,
            early_stop_patience: epochs.saturating_sub(1).max(1),
            rng_seed: seed,
            ..TrainConfig::default()
        };
        let result = train_unary(
            &train_set,
            Some(&val_set),
            &arch,
            TargetTransform::Log,
            &config,
            None,
        )
        .map_err(value_err)?;
        Ok(Predictor {
            model: result.model,
        })
    }

    /// Predicted scalar for one architecture string.
    fn predict(&self, table: &Table, arch_id: &str) -> PyResult<f64> {
        let graphs = table.graphs_for(&[arch_id.to_string()])?;
        Ok(self.model.predict(&graphs).map_err(value_err)?[0])
    }

    fn predict_many(&self, table: &Table, arch_ids: Vec<String>) -> PyResult<Vec<f64>> {
        let graphs = table.graphs_for(&arch_ids)?;
        self.model.predict(&graphs).map_err(value_err)
    }
}

/// The pairwise relation predictor.
#[pyclass]
struct Relation {
    predictor: BinaryPredictor,
}

#[pymethods]
impl Relation {
    /// Trains on all ordered pairs of `train_size` random models.
    #[staticmethod]
    #[pyo3(signature = (table, train_size=100, epochs=40, hidden=vec![600, 600, 600, 600], seed=0))]
    fn train(
        table: &Table,
        train_size: usize,
        epochs: usize,
        hidden: Vec<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let ids: Vec<&str> = table.table.arch_ids().collect();
        let (train_ids, _, _) = hwnas_core::predictors::split_ids(&ids, train_size, 0, seed)
            .map_err(value_err)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let models: Vec<(String, f64)> = train_ids
            .iter()
            .map(|id| {
                let acc = table
                    .table
                    .query_accuracy(
                        id,
                        AccuracyKind::Validation,
                        AccuracyMode::FixedSeed,
                        &mut rng,
                    )
                    .map_err(value_err)?;
                Ok((id.clone(), acc))
            })
            .collect::<PyResult<_>>()?;
        let pairs = build_pair_dataset(&models).map_err(value_err)?;
        let graphs = table.graphs_for(&train_ids)?;
        let arch = GcnConfig {
            input_dim: hwnas_core::space::FEATURE_DIM,
            hidden,
        };
        let config = TrainConfig {
            max_epochs: epochs,
            early_stop_patience: epochs.saturating_sub(1).max(1),
            rng_seed: seed,
            ..TrainConfig::binary(train_size)
        };
        let mut init_rng = ChaCha20Rng::seed_from_u64(seed);
        let bp = BinaryPredictor::init(&arch, BinaryHead::Softmax2, &mut init_rng);
        let result = train_binary(bp, &graphs, &pairs, None, &config).map_err(value_err)?;
        Ok(Relation {
            predictor: result.predictor,
        })
    }

    /// Probability that the first architecture is the better one.
    fn compare(&self, table: &Table, a: &str, b: &str) -> PyResult<f64> {
        let graphs = table.graphs_for(&[a.to_string(), b.to_string()])?;
        let (p1, _) = hwnas_core::predictors::binary_forward(&self.predictor, graphs[0], graphs[1])
            .map_err(value_err)?;
        Ok(p1)
    }

    /// Candidates sorted best-first by the learned comparator.
    fn rank(&self, table: &Table, arch_ids: Vec<String>) -> PyResult<Vec<String>> {
        let graphs = table.graphs_for(&arch_ids)?;
        let (order, _) = rank_candidates(&self.predictor, &graphs).map_err(value_err)?;
        Ok(order.into_iter().map(|i| arch_ids[i].clone()).collect())
    }
}

/// Runs a search; returns (best_arch, best_accuracy, trajectory).
#[pyfunction]
#[pyo3(signature = (table, algo="random", k=100, iterations=5, alpha=0.5, m=140, epochs=30, hidden=vec![600, 600, 600, 600], seed=0, latency_limit=None, device=None))]
#[allow(clippy::too_many_arguments)]
fn search(
    table: &Table,
    algo: &str,
    k: usize,
    iterations: usize,
    alpha: f64,
    m: usize,
    epochs: usize,
    hidden: Vec<usize>,
    seed: u64,
    latency_limit: Option<f64>,
    device: Option<String>,
) -> PyResult<(Option<String>, Option<f64>, Vec<(usize, f64)>)> {
    let mut config = SearchConfig::new(k, m);
    config.iterations = iterations;
    config.alpha = alpha;
    config.rng_seed = seed;
    config.latency_limit = latency_limit;
    config.device = device;
    config.arch = GcnConfig {
        input_dim: hwnas_core::space::FEATURE_DIM,
        hidden,
    };
    config.train.max_epochs = epochs;
    config.train.early_stop_patience = epochs.saturating_sub(1).max(1);
    let ctx = SearchContext::new(&table.table, &table.index);
    let result = match algo {
        "brp" => brp_nas_search(&ctx, &config),
        "random" => random_search(&ctx, &config),
        "ae" => aging_evolution(&ctx, &config, &EvolutionConfig::default()),
        "ae-cached" => aging_evolution(
            &ctx,
            &config,
            &EvolutionConfig {
                cached: true,
                ..EvolutionConfig::default()
            },
        ),
        other => return Err(PyValueError::new_err(format!("unknown algorithm {other:?}"))),
    }
    .map_err(value_err)?;
    let (best_arch, best_acc) = match result.best {
        Some((a, v)) => (Some(a), Some(v)),
        None => (None, None),
    };
    Ok((best_arch, best_acc, result.trajectory))
}

/// Spearman rank correlation.
#[pyfunction]
fn spearman(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    analysis::spearman(&xs, &ys).map_err(value_err)
}

/// Indices of the Pareto-optimal points under (max accuracy, min latency).
#[pyfunction]
fn pareto_indices(points: Vec<(f64, f64)>) -> PyResult<Vec<usize>> {
    let pts: Vec<analysis::ParetoPoint> = points
        .iter()
        .enumerate()
        .map(|(i, &(accuracy, latency))| analysis::ParetoPoint {
            arch_id: i.to_string(),
            accuracy,
            latency,
        })
        .collect();
    let front = analysis::pareto_front(&pts);
    let mut idx: Vec<usize> = front.iter().map(|p| p.arch_id.parse().unwrap()).collect();
    idx.sort_unstable();
    Ok(idx)
}

/// Per-bound fractions of predictions within relative error bounds.
#[pyfunction]
#[pyo3(signature = (preds, measures, bounds=vec![0.01, 0.05, 0.10]))]
fn error_bounds(preds: Vec<f64>, measures: Vec<f64>, bounds: Vec<f64>) -> PyResult<Vec<f64>> {
    let report = analysis::error_bound_report(&preds, &measures, &bounds).map_err(value_err)?;
    Ok(report.fraction_within)
}

/// Quartile-trimmed latency aggregation; returns (mean_ms, kept_fraction).
#[pyfunction]
#[pyo3(signature = (samples, group_size=10))]
fn aggregate_latency(samples: Vec<f64>, group_size: usize) -> PyResult<(f64, f64)> {
    let raw = RawSamples::with_group_size(samples, group_size);
    let agg = aggregate(&raw).map_err(value_err)?;
    Ok((agg.mean_ms, agg.kept_fraction))
}

#[pymodule]
fn hwnas_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Table>()?;
    m.add_class::<Predictor>()?;
    m.add_class::<Relation>()?;
    m.add_function(wrap_pyfunction!(parse_arch, m)?)?;
    m.add_function(wrap_pyfunction!(encode_arch, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_nb201, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_indices, m)?)?;
    m.add_function(wrap_pyfunction!(error_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_latency, m)?)?;
    Ok(())
}
