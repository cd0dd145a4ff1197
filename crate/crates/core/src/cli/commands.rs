//! Implementations behind the CLI subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::manifest::RunManifest;
use super::*;
use crate::analysis::{
    antisymmetry_rate, cycle_probe, error_bound_report, oracle_nas_analysis, pareto_front,
    spearman, trajectory_aggregate, OracleInput, ParetoPoint, DEFAULT_BOUNDS,
};
use crate::bench::{
    load_table, save_table, synth_table, synth_table_from_cells, AccuracyKind, AccuracyMode,
    BenchmarkTable, SyntheticSpec,
};
use crate::gcn::{train_unary, GcnConfig, GcnTrunk, TargetTransform, TrainConfig};
use crate::predictors::{
    build_pair_dataset, layerwise_calibrate, layerwise_predict, load_binary_checkpoint,
    load_op_costs_csv, load_unary_checkpoint, save_binary_checkpoint, save_unary_checkpoint,
    split_ids, train_binary, BinaryHead, BinaryPredictor, LayerwiseCostModel, UnaryKind,
};
use crate::search::{
    aging_evolution, brp_nas_search, random_search, EvolutionConfig, SearchConfig, SearchContext,
    SearchResult,
};
use crate::space::{load_nb101_cells, CellIndex, EncodedGraph, Space};
use crate::util::derive_seed;

fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", path.display())))
}

fn load_world(
    table_path: &Path,
    cells: Option<&Path>,
) -> Result<(BenchmarkTable, CellIndex), CliError> {
    let table = load_table(table_path)?;
    let index = match table.space {
        Space::Nb201 => {
            let ids: Vec<&str> = table.arch_ids().collect();
            CellIndex::from_nb201_ids(ids)?
        }
        Space::Nb101 => {
            let path = cells.ok_or_else(|| {
                CliError::Usage(
                    "NB-101 tables need --cells pointing at the cell list JSON".into(),
                )
            })?;
            CellIndex::from_cells(Space::Nb101, load_nb101_cells(path)?)
        }
    };
    Ok((table, index))
}

fn graphs_for<'a>(
    index: &'a CellIndex,
    ids: &[String],
) -> Result<Vec<&'a EncodedGraph>, CliError> {
    ids.iter()
        .map(|id| {
            index
                .graph(id)
                .ok_or_else(|| CliError::Usage(format!("{id:?} missing from the cell index")))
        })
        .collect()
}

/// Resolves a latency-prediction source into per-arch predictions.
fn predictions_from_source(
    source: &PredictionSource,
    table: &BenchmarkTable,
    index: &CellIndex,
    device: &str,
    seed: u64,
) -> Result<BTreeMap<String, f64>, CliError> {
    let chosen =
        source.ckpt.is_some() as u8 + source.identity as u8 + source.layerwise as u8;
    if chosen != 1 {
        return Err(CliError::Usage(
            "pick exactly one prediction source: --ckpt PATH, --identity or --layerwise"
                .into(),
        ));
    }
    if source.identity {
        return table
            .arch_ids()
            .map(|id| Ok((id.to_string(), table.query_latency(id, device)?)))
            .collect();
    }
    if source.layerwise {
        let base = layerwise_cost_model(source, table, device)?;
        let ids: Vec<&str> = table.arch_ids().collect();
        let train_n = 900.min(ids.len());
        let (train_ids, _, _) =
            split_ids(&ids, train_n, 0, derive_seed(seed, "layerwise-split"))?;
        let data: Vec<(&crate::space::CellGraph, f64)> = train_ids
            .iter()
            .map(|id| {
                let cell = index
                    .cell(id)
                    .ok_or_else(|| CliError::Usage(format!("{id:?} missing from index")))?;
                Ok((cell, table.query_latency(id, device)?))
            })
            .collect::<Result<_, CliError>>()?;
        let fitted = layerwise_calibrate(&base, &data)?;
        return table
            .arch_ids()
            .map(|id| {
                let cell = index
                    .cell(id)
                    .ok_or_else(|| CliError::Usage(format!("{id:?} missing from index")))?;
                Ok((id.to_string(), layerwise_predict(&fitted, cell)))
            })
            .collect();
    }
    let ckpt = source.ckpt.as_ref().expect("checked above");
    let (model, _) = load_unary_checkpoint(ckpt)?;
    let ids: Vec<String> = table.arch_ids().map(str::to_string).collect();
    let graphs = graphs_for(index, &ids)?;
    let preds = model.predict(&graphs)?;
    Ok(ids.into_iter().zip(preds).collect())
}

fn layerwise_cost_model(
    source: &PredictionSource,
    table: &BenchmarkTable,
    device: &str,
) -> Result<LayerwiseCostModel, CliError> {
    if let Some(path) = &source.op_costs {
        let costs = load_op_costs_csv(fs::File::open(path)?)?;
        let per_device = costs.get(device).ok_or_else(|| {
            CliError::Usage(format!("op-cost CSV has no rows for device {device:?}"))
        })?;
        return Ok(LayerwiseCostModel::new(per_device.clone()));
    }
    let generator = table.generator.as_ref().ok_or_else(|| {
        CliError::Usage(
            "layer-wise baseline needs --op-costs for non-synthetic tables".into(),
        )
    })?;
    let profile = generator.device(device).ok_or_else(|| {
        CliError::Usage(format!("generator spec has no device {device:?}"))
    })?;
    Ok(LayerwiseCostModel::from_profile(profile))
}

pub(super) fn gen_synthetic(args: &GenSyntheticArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let spec = match &args.spec {
        Some(path) => serde_json::from_str::<SyntheticSpec>(&fs::read_to_string(path)?)
            .map_err(|e| CliError::Usage(format!("bad generator spec: {e}")))?,
        None => SyntheticSpec {
            seed: args.seed,
            noise_sd: args.noise_sd,
            ..SyntheticSpec::default()
        },
    };
    let table = match args.space.as_str() {
        "nb201" => synth_table(&spec, Space::Nb201)?,
        "nb101" => {
            let cells_path = args.cells.as_ref().ok_or_else(|| {
                CliError::Usage("--space nb101 needs --cells with the cell list JSON".into())
            })?;
            let cells = load_nb101_cells(cells_path)?;
            synth_table_from_cells(&spec, Space::Nb101, &cells, false)?
        }
        other => return Err(CliError::Usage(format!("unknown space {other:?}"))),
    };
    let csv_path = args.out.join("table.csv");
    save_table(&table, &csv_path)?;

    let mut manifest = RunManifest::new(
        "gen-synthetic",
        spec.seed,
        serde_json::to_value(args).expect("args serialize"),
    );
    if let Some(path) = &args.cells {
        manifest.digest_input(path)?;
    }
    manifest.write(&args.out)?;
    // generated tables must satisfy their own loader
    load_table(&csv_path)?;
    Ok(())
}

struct TrialMetrics {
    trial: usize,
    seed: u64,
    epochs_run: usize,
    best_val_loss: f64,
    bounds: Option<[f64; 3]>,
    spearman: Option<f64>,
    pair_accuracy: Option<f64>,
}

pub(super) fn train_predictor(args: &TrainPredictorArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let (table, index) = load_world(&args.table, args.cells.as_deref())?;
    let arch = GcnConfig {
        input_dim: crate::space::FEATURE_DIM,
        hidden: args.hidden.clone(),
    };
    let transfer: Option<GcnTrunk> = match &args.transfer_from {
        Some(path) => Some(load_unary_checkpoint(path)?.0.trunk),
        None => None,
    };
    let default_train_size = match args.kind.as_str() {
        "latency" => 900,
        _ => 100,
    };
    let train_size = args.train_size.unwrap_or(default_train_size);
    if args.kind == "latency" && args.device.is_none() {
        return Err(CliError::Usage("--kind latency needs --device".into()));
    }

    let trials: Vec<Result<TrialMetrics, CliError>> = (0..args.repeat)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = derive_seed(args.seed, &format!("trial-{trial}"));
            run_predictor_trial(
                args, &table, &index, &arch, transfer.as_ref(), train_size, trial, trial_seed,
            )
        })
        .collect();

    let mut wtr = csv::Writer::from_path(args.out.join("metrics.csv"))
        .map_err(|e| CliError::Other(e.to_string()))?;
    wtr.write_record([
        "trial",
        "seed",
        "kind",
        "device",
        "train_size",
        "val_size",
        "epochs_run",
        "best_val_loss",
        "bound_1pct",
        "bound_5pct",
        "bound_10pct",
        "spearman",
        "pair_accuracy",
    ])
    .map_err(|e| CliError::Other(e.to_string()))?;
    for trial in trials {
        let m = trial?;
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        wtr.write_record([
            m.trial.to_string(),
            m.seed.to_string(),
            args.kind.clone(),
            args.device.clone().unwrap_or_default(),
            train_size.to_string(),
            args.val_size.to_string(),
            m.epochs_run.to_string(),
            m.best_val_loss.to_string(),
            fmt_opt(m.bounds.map(|b| b[0])),
            fmt_opt(m.bounds.map(|b| b[1])),
            fmt_opt(m.bounds.map(|b| b[2])),
            fmt_opt(m.spearman),
            fmt_opt(m.pair_accuracy),
        ])
        .map_err(|e| CliError::Other(e.to_string()))?;
    }
    wtr.flush().map_err(|e| CliError::Other(e.to_string()))?;

    let mut manifest = RunManifest::new(
        "train-predictor",
        args.seed,
        serde_json::to_value(args).expect("args serialize"),
    );
    manifest.digest_input(&args.table)?;
    if let Some(path) = &args.transfer_from {
        manifest.digest_input(path)?;
    }
    manifest.write(&args.out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_predictor_trial(
    args: &TrainPredictorArgs,
    table: &BenchmarkTable,
    index: &CellIndex,
    arch: &GcnConfig,
    transfer: Option<&GcnTrunk>,
    train_size: usize,
    trial: usize,
    trial_seed: u64,
) -> Result<TrialMetrics, CliError> {
    let ids: Vec<&str> = table.arch_ids().collect();
    let (train_ids, val_ids, test_ids) = split_ids(
        &ids,
        train_size,
        args.val_size,
        derive_seed(trial_seed, "split"),
    )?;
    let mut acc_rng = ChaCha20Rng::seed_from_u64(derive_seed(trial_seed, "targets"));
    let mut target_of = |id: &str| -> Result<f64, CliError> {
        Ok(match args.kind.as_str() {
            "latency" => table.query_latency(id, args.device.as_ref().unwrap())?,
            _ => table.query_accuracy(
                id,
                AccuracyKind::Validation,
                AccuracyMode::FixedSeed,
                &mut acc_rng,
            )?,
        })
    };

    if args.kind == "binary" {
        let models: Vec<(String, f64)> = train_ids
            .iter()
            .map(|id| Ok((id.clone(), target_of(id)?)))
            .collect::<Result<_, CliError>>()?;
        let pairs = build_pair_dataset(&models)?;
        let graphs = graphs_for(index, &train_ids)?;
        let mut config = TrainConfig::binary(train_size);
        if let Some(e) = args.epochs {
            config.max_epochs = e;
            config.early_stop_patience = config.early_stop_patience.min(e.saturating_sub(1)).max(1);
        }
        if let Some(b) = args.batch_size {
            config.batch_size = b;
        }
        config.rng_seed = derive_seed(trial_seed, "train");
        let mut init_rng = ChaCha20Rng::seed_from_u64(derive_seed(trial_seed, "init"));
        let bp = match transfer {
            Some(trunk) => {
                BinaryPredictor::from_trunk(trunk.clone(), BinaryHead::Softmax2, &mut init_rng)
            }
            None => BinaryPredictor::init(arch, BinaryHead::Softmax2, &mut init_rng),
        };
        let result = train_binary(bp, &graphs, &pairs, None, &config)?;
        save_binary_checkpoint(
            &result.predictor,
            &args.out.join(format!("predictor_{trial}.ckpt")),
        )?;

        // held-out ordered-pair accuracy on sampled test pairs
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(trial_seed, "eval-pairs"));
        let mut correct = 0usize;
        let mut counted = 0usize;
        let emb_ids: Vec<String> = test_ids.clone();
        let test_graphs = graphs_for(index, &emb_ids)?;
        let emb = result.predictor.embed_all(&test_graphs)?;
        let mut acc_of = BTreeMap::new();
        for id in &emb_ids {
            acc_of.insert(
                id.clone(),
                table.query_accuracy(
                    id,
                    AccuracyKind::Validation,
                    AccuracyMode::FixedSeed,
                    &mut rng,
                )?,
            );
        }
        for _ in 0..2000.min(emb_ids.len() * (emb_ids.len() - 1)) {
            let i = rng.random_range(0..emb_ids.len());
            let j = rng.random_range(0..emb_ids.len());
            if i == j {
                continue;
            }
            let (ai, aj) = (acc_of[&emb_ids[i]], acc_of[&emb_ids[j]]);
            if ai == aj {
                continue;
            }
            let (p1, _) = result.predictor.probabilities_from_embeddings(
                emb.row(i).as_slice().unwrap(),
                emb.row(j).as_slice().unwrap(),
            );
            counted += 1;
            if (p1 > 0.5) == (ai > aj) {
                correct += 1;
            }
        }
        return Ok(TrialMetrics {
            trial,
            seed: trial_seed,
            epochs_run: result.epochs_run,
            best_val_loss: result.best_val_loss,
            bounds: None,
            spearman: None,
            pair_accuracy: Some(correct as f64 / counted.max(1) as f64),
        });
    }

    // unary kinds
    let collect = |ids: &[String]| -> Result<Vec<(EncodedGraph, f64)>, CliError> {
        ids.iter()
            .map(|id| {
                let g = index
                    .graph(id)
                    .ok_or_else(|| CliError::Usage(format!("{id:?} missing from index")))?;
                let mut rng = ChaCha20Rng::seed_from_u64(0);
                let target = match args.kind.as_str() {
                    "latency" => table.query_latency(id, args.device.as_ref().unwrap())?,
                    _ => table.query_accuracy(
                        id,
                        AccuracyKind::Validation,
                        AccuracyMode::FixedSeed,
                        &mut rng,
                    )?,
                };
                Ok((g.clone(), target))
            })
            .collect()
    };
    let train_set = collect(&train_ids)?;
    let val_set = collect(&val_ids)?;
    let (transform, kind, mut config) = match args.kind.as_str() {
        "latency" => (
            TargetTransform::Log,
            UnaryKind::Latency {
                device: args.device.clone().unwrap(),
            },
            TrainConfig::default(),
        ),
        "accuracy" => (
            TargetTransform::Identity,
            UnaryKind::Accuracy,
            TrainConfig::accuracy_unary(train_size),
        ),
        other => return Err(CliError::Usage(format!("unknown kind {other:?}"))),
    };
    if let Some(e) = args.epochs {
        config.max_epochs = e;
        config.early_stop_patience = config.early_stop_patience.min(e.saturating_sub(1)).max(1);
    }
    if let Some(b) = args.batch_size {
        config.batch_size = b;
    }
    config.rng_seed = derive_seed(trial_seed, "train");

    let result = train_unary(
        &train_set,
        Some(&val_set),
        arch,
        transform,
        &config,
        transfer,
    )?;
    save_unary_checkpoint(
        &result.model,
        &kind,
        &args.out.join(format!("predictor_{trial}.ckpt")),
    )?;

    // test-set metrics
    let test_graphs = graphs_for(index, &test_ids)?;
    let preds = result.model.predict(&test_graphs)?;
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let measured: Vec<f64> = test_ids
        .iter()
        .map(|id| match args.kind.as_str() {
            "latency" => Ok(table.query_latency(id, args.device.as_ref().unwrap())?),
            _ => Ok(table.query_accuracy(
                id,
                AccuracyKind::Validation,
                AccuracyMode::FixedSeed,
                &mut rng,
            )?),
        })
        .collect::<Result<_, CliError>>()?;
    let report = error_bound_report(&preds, &measured, &DEFAULT_BOUNDS)?;
    let rho = spearman(&preds, &measured).ok();
    Ok(TrialMetrics {
        trial,
        seed: trial_seed,
        epochs_run: result.epochs_run,
        best_val_loss: result.best_val_loss,
        bounds: Some([
            report.fraction_within[0],
            report.fraction_within[1],
            report.fraction_within[2],
        ]),
        spearman: rho,
        pair_accuracy: None,
    })
}

pub(super) fn search(args: &SearchArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let (table, index) = load_world(&args.table, args.cells.as_deref())?;

    let predictions: Option<BTreeMap<String, f64>> = if args.latency_oracle
        || args.latency_ckpt.is_some()
    {
        let device = args.device.as_ref().ok_or_else(|| {
            CliError::Usage("latency predictions need --device".into())
        })?;
        let source = PredictionSource {
            ckpt: args.latency_ckpt.clone(),
            identity: args.latency_oracle,
            layerwise: false,
            op_costs: None,
        };
        Some(predictions_from_source(
            &source, &table, &index, device, args.seed,
        )?)
    } else {
        None
    };

    let transfer: Option<GcnTrunk> = match &args.transfer_from {
        Some(path) => Some(load_unary_checkpoint(path)?.0.trunk),
        None => None,
    };

    let base_config = {
        let mut config = SearchConfig::new(args.budget_k, args.total_m);
        config.iterations = args.iterations;
        config.alpha = args.alpha;
        config.latency_limit = args.latency_limit;
        config.device = args.device.clone();
        config.accuracy_mode = match args.accuracy_mode.as_str() {
            "random-seed" => AccuracyMode::RandomSeed,
            _ => AccuracyMode::FixedSeed,
        };
        config.arch = GcnConfig {
            input_dim: crate::space::FEATURE_DIM,
            hidden: args.hidden.clone(),
        };
        config.train = TrainConfig::binary(args.budget_k);
        if let Some(e) = args.epochs {
            config.train.max_epochs = e;
            config.train.early_stop_patience =
                config.train.early_stop_patience.min(e.saturating_sub(1)).max(1);
        }
        config.transfer_trunk = transfer;
        config
    };

    let results: Vec<Result<SearchResult, CliError>> = (0..args.repeat)
        .into_par_iter()
        .map(|trial| {
            let mut config = base_config.clone();
            config.rng_seed = derive_seed(args.seed, &format!("trial-{trial}"));
            config.train.rng_seed = config.rng_seed;
            let ctx = match &predictions {
                Some(p) => SearchContext::new(&table, &index).with_predictions(p),
                None => SearchContext::new(&table, &index),
            };
            let result = match args.algo.as_str() {
                "brp" => brp_nas_search(&ctx, &config)?,
                "random" => random_search(&ctx, &config)?,
                "ae" => aging_evolution(&ctx, &config, &EvolutionConfig::default())?,
                "ae-cached" => aging_evolution(
                    &ctx,
                    &config,
                    &EvolutionConfig {
                        cached: true,
                        ..EvolutionConfig::default()
                    },
                )?,
                other => return Err(CliError::Usage(format!("unknown algorithm {other:?}"))),
            };
            Ok(result)
        })
        .collect();
    let results: Vec<SearchResult> = results.into_iter().collect::<Result<_, _>>()?;

    // per-trial event logs
    for (trial, result) in results.iter().enumerate() {
        let mut file = fs::File::create(args.out.join(format!("events_{trial}.jsonl")))?;
        for event in &result.events {
            let line = serde_json::to_string(event).expect("event serializes");
            writeln!(file, "{line}")?;
        }
    }

    // densified incumbent trajectories aggregated across trials
    let series: Vec<Vec<f64>> = results
        .iter()
        .filter(|r| !r.trajectory.is_empty())
        .map(|r| densify_trajectory(&r.trajectory, args.total_m))
        .collect();
    if !series.is_empty() {
        let bands = trajectory_aggregate(&series)?;
        let mut wtr = csv::Writer::from_path(args.out.join("trajectory.csv"))
            .map_err(|e| CliError::Other(e.to_string()))?;
        wtr.write_record(["step", "median", "q25", "q75"])
            .map_err(|e| CliError::Other(e.to_string()))?;
        for step in 0..bands.median.len() {
            wtr.write_record([
                (step + 1).to_string(),
                bands.median[step].to_string(),
                bands.q25[step].to_string(),
                bands.q75[step].to_string(),
            ])
            .map_err(|e| CliError::Other(e.to_string()))?;
        }
        wtr.flush().map_err(|e| CliError::Other(e.to_string()))?;
    }

    let bests: Vec<serde_json::Value> = results
        .iter()
        .map(|r| match &r.best {
            Some((arch, acc)) => serde_json::json!({
                "arch_id": arch,
                "accuracy": acc,
                "trained": r.trained.len(),
            }),
            None => serde_json::json!({ "arch_id": null, "trained": r.trained.len() }),
        })
        .collect();
    let mut final_accs: Vec<f64> =
        results.iter().filter_map(|r| r.best.as_ref().map(|(_, a)| *a)).collect();
    final_accs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if final_accs.is_empty() {
        serde_json::Value::Null
    } else {
        serde_json::json!(crate::util::quantile_sorted(&final_accs, 0.5))
    };
    let summary = serde_json::json!({
        "algo": args.algo,
        "trials": args.repeat,
        "median_best_accuracy": median,
        "per_trial": bests,
    });
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;

    let mut manifest = RunManifest::new(
        "search",
        args.seed,
        serde_json::to_value(args).expect("args serialize"),
    );
    manifest.digest_input(&args.table)?;
    if let Some(path) = &args.latency_ckpt {
        manifest.digest_input(path)?;
    }
    if let Some(path) = &args.transfer_from {
        manifest.digest_input(path)?;
    }
    manifest.write(&args.out)?;
    Ok(())
}

/// Incumbent accuracy at every step 1..=total; steps before the first
/// incumbent are front-filled with it.
fn densify_trajectory(trajectory: &[(usize, f64)], total: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(total);
    let mut cursor = 0usize;
    let mut current = trajectory[0].1;
    for step in 1..=total {
        while cursor < trajectory.len() && trajectory[cursor].0 <= step {
            current = trajectory[cursor].1;
            cursor += 1;
        }
        out.push(current);
    }
    out
}

fn fixed_val_accuracy(table: &BenchmarkTable, id: &str) -> Result<f64, CliError> {
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    Ok(table.query_accuracy(id, AccuracyKind::Validation, AccuracyMode::FixedSeed, &mut rng)?)
}

pub(super) fn analyze_oracle(args: &OracleArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let (table, index) = load_world(&args.table, None)?;
    let preds = predictions_from_source(&args.source, &table, &index, &args.device, args.seed)?;

    let models: Vec<OracleInput> = table
        .arch_ids()
        .map(|id| {
            Ok(OracleInput {
                arch_id: id.to_string(),
                accuracy: fixed_val_accuracy(&table, id)?,
                measured: table.query_latency(id, &args.device)?,
                predicted: preds[id],
            })
        })
        .collect::<Result<_, CliError>>()?;

    let thresholds = match &args.thresholds {
        Some(sweep) => parse_sweep(sweep)?,
        None => {
            let lats: Vec<f64> = models.iter().map(|m| m.measured).collect();
            let lo = lats.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = lats.iter().cloned().fold(0.0, f64::max);
            linspace(lo, hi, 61)
        }
    };
    let reports = oracle_nas_analysis(&models, &thresholds);

    let mut wtr = csv::Writer::from_path(args.out.join("oracle.csv"))
        .map_err(|e| CliError::Other(e.to_string()))?;
    wtr.write_record([
        "threshold",
        "n_false_pos",
        "n_false_neg",
        "n_true_pos",
        "n_true_neg",
        "assumed_best",
        "effective_best",
        "ground_truth_best",
        "missed_accuracy",
        "overclaimed_accuracy",
        "miss_latency_error",
        "overclaim_latency_error",
        "infeasible",
    ])
    .map_err(|e| CliError::Other(e.to_string()))?;
    for r in &reports {
        let opt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let opt_s = |v: &Option<String>| v.clone().unwrap_or_default();
        wtr.write_record([
            r.threshold.to_string(),
            r.n_false_pos.to_string(),
            r.n_false_neg.to_string(),
            r.n_true_pos.to_string(),
            r.n_true_neg.to_string(),
            opt_s(&r.assumed_best),
            opt_s(&r.effective_best),
            opt_s(&r.ground_truth_best),
            opt_f(r.missed_accuracy),
            opt_f(r.overclaimed_accuracy),
            opt_f(r.miss_latency_error),
            opt_f(r.overclaim_latency_error),
            r.infeasible.to_string(),
        ])
        .map_err(|e| CliError::Other(e.to_string()))?;
    }
    wtr.flush().map_err(|e| CliError::Other(e.to_string()))?;

    let mut manifest = RunManifest::new(
        "analyze-oracle",
        args.seed,
        serde_json::to_value(args).expect("args serialize"),
    );
    manifest.digest_input(&args.table)?;
    if let Some(p) = &args.source.ckpt {
        manifest.digest_input(p)?;
    }
    manifest.write(&args.out)?;
    Ok(())
}

pub(super) fn analyze_pareto(args: &ParetoArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let (table, index) = load_world(&args.table, None)?;
    let preds = predictions_from_source(&args.source, &table, &index, &args.device, args.seed)?;

    let mut measured_pts = Vec::new();
    let mut predicted_pts = Vec::new();
    for id in table.arch_ids() {
        let accuracy = fixed_val_accuracy(&table, id)?;
        measured_pts.push(ParetoPoint {
            arch_id: id.to_string(),
            accuracy,
            latency: table.query_latency(id, &args.device)?,
        });
        predicted_pts.push(ParetoPoint {
            arch_id: id.to_string(),
            accuracy,
            latency: preds[id],
        });
    }
    let measured_front: std::collections::BTreeSet<String> = pareto_front(&measured_pts)
        .into_iter()
        .map(|p| p.arch_id)
        .collect();
    let predicted_front: std::collections::BTreeSet<String> = pareto_front(&predicted_pts)
        .into_iter()
        .map(|p| p.arch_id)
        .collect();

    let mut wtr = csv::Writer::from_path(args.out.join("pareto.csv"))
        .map_err(|e| CliError::Other(e.to_string()))?;
    wtr.write_record([
        "arch_id",
        "accuracy",
        "measured_latency",
        "predicted_latency",
        "on_measured_front",
        "on_predicted_front",
    ])
    .map_err(|e| CliError::Other(e.to_string()))?;
    for (m, p) in measured_pts.iter().zip(&predicted_pts) {
        wtr.write_record([
            m.arch_id.clone(),
            m.accuracy.to_string(),
            m.latency.to_string(),
            p.latency.to_string(),
            measured_front.contains(&m.arch_id).to_string(),
            predicted_front.contains(&m.arch_id).to_string(),
        ])
        .map_err(|e| CliError::Other(e.to_string()))?;
    }
    wtr.flush().map_err(|e| CliError::Other(e.to_string()))?;

    let recovered = measured_front.intersection(&predicted_front).count();
    let summary = serde_json::json!({
        "measured_front": measured_front.len(),
        "predicted_front": predicted_front.len(),
        "recovered": recovered,
        "recovery_fraction": recovered as f64 / measured_front.len().max(1) as f64,
    });
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;

    let mut manifest = RunManifest::new(
        "analyze-pareto",
        args.seed,
        serde_json::to_value(args).expect("args serialize"),
    );
    manifest.digest_input(&args.table)?;
    if let Some(p) = &args.source.ckpt {
        manifest.digest_input(p)?;
    }
    manifest.write(&args.out)?;
    Ok(())
}

pub(super) fn analyze_errorbound(args: &ErrorboundArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let (table, index) = load_world(&args.table, None)?;
    let (model, _) = load_unary_checkpoint(&args.ckpt)?;
    let ids: Vec<String> = table.arch_ids().map(str::to_string).collect();
    let graphs = graphs_for(&index, &ids)?;
    let preds = model.predict(&graphs)?;
    let measured: Vec<f64> = ids
        .iter()
        .map(|id| Ok(table.query_latency(id, &args.device)?))
        .collect::<Result<_, CliError>>()?;
    let report = error_bound_report(&preds, &measured, &DEFAULT_BOUNDS)?;

    let mut wtr = csv::Writer::from_path(args.out.join("errorbound.csv"))
        .map_err(|e| CliError::Other(e.to_string()))?;
    wtr.write_record(["bound", "fraction_within"])
        .map_err(|e| CliError::Other(e.to_string()))?;
    for (b, f) in report.bounds.iter().zip(&report.fraction_within) {
        wtr.write_record([b.to_string(), f.to_string()])
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    wtr.flush().map_err(|e| CliError::Other(e.to_string()))?;

    let mut manifest = RunManifest::new(
        "analyze-errorbound",
        args.seed,
        serde_json::to_value(args).expect("args serialize"),
    );
    manifest.digest_input(&args.table)?;
    manifest.digest_input(&args.ckpt)?;
    manifest.write(&args.out)?;
    Ok(())
}

pub(super) fn analyze_relation(args: &RelationArgs) -> Result<(), CliError> {
    ensure_out_dir(&args.out)?;
    let (table, index) = load_world(&args.table, None)?;
    let bp = load_binary_checkpoint(&args.ckpt)?;

    let ids: Vec<&str> = table.arch_ids().collect();
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(args.seed, "relation-sample"));
    let sample_n = args.sample.min(ids.len());
    let sampled: Vec<String> = rand::seq::index::sample(&mut rng, ids.len(), sample_n)
        .into_iter()
        .map(|i| ids[i].to_string())
        .collect();
    let graphs = graphs_for(&index, &sampled)?;
    let emb = bp.embed_all(&graphs)?;
    let p1 = |a: usize, b: usize| {
        bp.probabilities_from_embeddings(
            emb.row(a).as_slice().unwrap(),
            emb.row(b).as_slice().unwrap(),
        )
        .0
    };

    let pairs: Vec<(usize, usize)> = (0..sample_n)
        .flat_map(|a| ((a + 1)..sample_n).map(move |b| (a, b)))
        .collect();
    let rate = antisymmetry_rate(p1, &pairs);
    let cycles = cycle_probe(sample_n, |a, b| a != b && p1(a, b) > 0.5, args.cutoff);

    let mut wtr = csv::Writer::from_path(args.out.join("relation.csv"))
        .map_err(|e| CliError::Other(e.to_string()))?;
    wtr.write_record(["sampled_models", "pairs", "antisymmetry_rate", "cycles", "saturated"])
        .map_err(|e| CliError::Other(e.to_string()))?;
    wtr.write_record([
        sample_n.to_string(),
        pairs.len().to_string(),
        rate.to_string(),
        cycles.count.to_string(),
        cycles.saturated.to_string(),
    ])
    .map_err(|e| CliError::Other(e.to_string()))?;
    wtr.flush().map_err(|e| CliError::Other(e.to_string()))?;

    let mut manifest = RunManifest::new(
        "analyze-relation",
        args.seed,
        serde_json::to_value(args).expect("args serialize"),
    );
    manifest.digest_input(&args.table)?;
    manifest.digest_input(&args.ckpt)?;
    manifest.write(&args.out)?;
    Ok(())
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "threshold sweep must be lo:hi:count, got {spec:?}"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep start {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep end {:?}", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad sweep count {:?}", parts[2])))?;
    if count < 2 || hi <= lo {
        return Err(CliError::Usage("sweep needs hi > lo and count >= 2".into()));
    }
    Ok(linspace(lo, hi, count))
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}
