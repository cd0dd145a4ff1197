//! Versioned CSV + JSON sidecar persistence for benchmark tables.
//!
//! CSV columns: `arch_id, space, val_acc_seed_*, test_acc_seed_*,
//! lat_<device>..., flops, params`. The sidecar (`<table>.devices.json`)
//! carries the device list, units and, for synthetic tables, the generator
//! spec. Entries are written sorted by `arch_id`, so `save ∘ load` is the
//! identity on canonical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::SyntheticSpec;
use super::table::{BenchmarkEntry, BenchmarkTable};
use super::BenchError;
use crate::space::Space;

pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceMeta {
    pub name: String,
    pub unit: String,
}

/// Sidecar metadata stored next to the CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableSidecar {
    pub version: u32,
    pub space: Space,
    pub devices: Vec<DeviceMeta>,
    pub accuracy_seeds: usize,
    pub partial: bool,
    pub generator: Option<SyntheticSpec>,
}

/// Sidecar path for a table CSV: `table.csv` → `table.devices.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("devices.json")
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips exactly
    format!("{v}")
}

/// Writes the table CSV and its sidecar.
pub fn save_table(table: &BenchmarkTable, csv_path: &Path) -> Result<(), BenchError> {
    table.validate()?;
    let seeds = table.accuracy_seeds();
    let mut wtr = csv::Writer::from_path(csv_path)?;
    let mut header = vec!["arch_id".to_string(), "space".to_string()];
    header.extend((0..seeds).map(|k| format!("val_acc_seed_{k}")));
    header.extend((0..seeds).map(|k| format!("test_acc_seed_{k}")));
    header.extend(table.devices.iter().map(|d| format!("lat_{d}")));
    header.push("flops".into());
    header.push("params".into());
    wtr.write_record(&header)?;
    for entry in table.entries.values() {
        let mut row = vec![entry.arch_id.clone(), table.space.to_string()];
        row.extend(entry.val_accuracy.iter().map(|v| fmt_f64(*v)));
        row.extend(entry.test_accuracy.iter().map(|v| fmt_f64(*v)));
        for device in &table.devices {
            row.push(fmt_f64(entry.latency_ms[device]));
        }
        row.push(entry.flops.to_string());
        row.push(entry.params.to_string());
        wtr.write_record(&row)?;
    }
    wtr.flush()?;

    let sidecar = TableSidecar {
        version: TABLE_FORMAT_VERSION,
        space: table.space,
        devices: table
            .devices
            .iter()
            .map(|d| DeviceMeta {
                name: d.clone(),
                unit: "ms".into(),
            })
            .collect(),
        accuracy_seeds: seeds,
        partial: table.partial,
        generator: table.generator.clone(),
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    fs::write(sidecar_path(csv_path), json)?;
    Ok(())
}

fn parse_f64(field: &str, row: usize, col: &str) -> Result<f64, BenchError> {
    field.parse::<f64>().map_err(|_| BenchError::Schema {
        row,
        msg: format!("column {col}: expected a number, got {field:?}"),
    })
}

fn parse_u64(field: &str, row: usize, col: &str) -> Result<u64, BenchError> {
    field.parse::<u64>().map_err(|_| BenchError::Schema {
        row,
        msg: format!("column {col}: expected a count, got {field:?}"),
    })
}

fn parse_space(field: &str, row: usize) -> Result<Space, BenchError> {
    match field {
        "nb201" => Ok(Space::Nb201),
        "nb101" => Ok(Space::Nb101),
        other => Err(BenchError::Schema {
            row,
            msg: format!("unknown space {other:?}"),
        }),
    }
}

/// Loads a table written by [`save_table`].
pub fn load_table(csv_path: &Path) -> Result<BenchmarkTable, BenchError> {
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| -> Result<usize, BenchError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BenchError::Schema {
                row: 0,
                msg: format!("missing column {name:?}"),
            })
    };
    let arch_col = col("arch_id")?;
    let space_col = col("space")?;
    let flops_col = col("flops")?;
    let params_col = col("params")?;
    let val_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("val_acc_seed_"))
        .map(|(i, _)| i)
        .collect();
    let test_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("test_acc_seed_"))
        .map(|(i, _)| i)
        .collect();
    let device_cols: Vec<(usize, String)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix("lat_").map(|d| (i, d.to_string())))
        .collect();
    if val_cols.is_empty() {
        return Err(BenchError::Schema {
            row: 0,
            msg: "need at least one val_acc_seed_* column".into(),
        });
    }

    let mut entries: BTreeMap<String, BenchmarkEntry> = BTreeMap::new();
    let mut space: Option<Space> = None;
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        let get = |i: usize| -> &str { record.get(i).unwrap_or("") };
        let arch_id = get(arch_col).to_string();
        let row_space = parse_space(get(space_col), row)?;
        match space {
            None => space = Some(row_space),
            Some(s) if s != row_space => {
                return Err(BenchError::Schema {
                    row,
                    msg: "mixed spaces in one table".into(),
                })
            }
            _ => {}
        }
        let mut val_accuracy = Vec::with_capacity(val_cols.len());
        for &c in &val_cols {
            val_accuracy.push(parse_f64(get(c), row, &header[c])?);
        }
        let mut test_accuracy = Vec::with_capacity(test_cols.len());
        for &c in &test_cols {
            test_accuracy.push(parse_f64(get(c), row, &header[c])?);
        }
        let mut latency_ms = BTreeMap::new();
        for (c, device) in &device_cols {
            let v = parse_f64(get(*c), row, &header[*c])?;
            if !(v > 0.0) {
                return Err(BenchError::Schema {
                    row,
                    msg: format!("non-positive latency for device {device:?}"),
                });
            }
            latency_ms.insert(device.clone(), v);
        }
        let entry = BenchmarkEntry {
            arch_id: arch_id.clone(),
            val_accuracy,
            test_accuracy,
            latency_ms,
            flops: parse_u64(get(flops_col), row, "flops")?,
            params: parse_u64(get(params_col), row, "params")?,
        };
        if entries.insert(arch_id.clone(), entry).is_some() {
            return Err(BenchError::Schema {
                row,
                msg: format!("duplicate arch_id {arch_id:?}"),
            });
        }
    }
    let space = space.ok_or(BenchError::Schema {
        row: 0,
        msg: "table has no rows".into(),
    })?;

    let sidecar: Option<TableSidecar> = match fs::read_to_string(sidecar_path(csv_path)) {
        Ok(raw) => Some(serde_json::from_str(&raw)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    if let Some(sc) = &sidecar {
        if sc.space != space {
            return Err(BenchError::Invalid("sidecar space mismatch".into()));
        }
        if sc.accuracy_seeds != val_cols.len() {
            return Err(BenchError::Invalid("sidecar seed-count mismatch".into()));
        }
    }

    let devices: Vec<String> = device_cols.iter().map(|(_, d)| d.clone()).collect();
    let partial = match space {
        Space::Nb201 => entries.len() != 15_625,
        Space::Nb101 => sidecar.as_ref().map(|s| s.partial).unwrap_or(true),
    };
    let table = BenchmarkTable {
        space,
        entries,
        devices,
        partial,
        generator: sidecar.and_then(|s| s.generator),
    };
    table.validate()?;
    Ok(table)
}

/// Column mapping for ingesting externally produced latency/accuracy tables
/// (e.g. public measurement datasets) without rewriting them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub space: Space,
    pub arch_id: String,
    pub val_acc: Vec<String>,
    pub test_acc: Vec<String>,
    /// device name → column name
    pub latency: BTreeMap<String, String>,
    pub flops: Option<String>,
    pub params: Option<String>,
}

/// Loads a foreign CSV through a [`ColumnMapping`].
pub fn load_table_mapped(
    csv_path: &Path,
    mapping: &ColumnMapping,
) -> Result<BenchmarkTable, BenchError> {
    let mut rdr = csv::Reader::from_path(csv_path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| -> Result<usize, BenchError> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BenchError::Schema {
                row: 0,
                msg: format!("missing column {name:?}"),
            })
    };
    let arch_col = col(&mapping.arch_id)?;
    let val_cols: Vec<usize> = mapping.val_acc.iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let test_cols: Vec<usize> =
        mapping.test_acc.iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let device_cols: Vec<(String, usize)> = mapping
        .latency
        .iter()
        .map(|(d, c)| Ok((d.clone(), col(c)?)))
        .collect::<Result<_, BenchError>>()?;
    let flops_col = mapping.flops.as_deref().map(col).transpose()?;
    let params_col = mapping.params.as_deref().map(col).transpose()?;

    let mut entries = BTreeMap::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        let get = |i: usize| -> &str { record.get(i).unwrap_or("") };
        let arch_id = get(arch_col).to_string();
        let mut latency_ms = BTreeMap::new();
        for (device, c) in &device_cols {
            let v = parse_f64(get(*c), row, &header[*c])?;
            if !(v > 0.0) {
                return Err(BenchError::Schema {
                    row,
                    msg: format!("non-positive latency for device {device:?}"),
                });
            }
            latency_ms.insert(device.clone(), v);
        }
        let entry = BenchmarkEntry {
            arch_id: arch_id.clone(),
            val_accuracy: val_cols
                .iter()
                .map(|&c| parse_f64(get(c), row, &header[c]))
                .collect::<Result<_, _>>()?,
            test_accuracy: test_cols
                .iter()
                .map(|&c| parse_f64(get(c), row, &header[c]))
                .collect::<Result<_, _>>()?,
            latency_ms,
            flops: flops_col.map(|c| parse_u64(get(c), row, "flops")).transpose()?.unwrap_or(0),
            params: params_col
                .map(|c| parse_u64(get(c), row, "params"))
                .transpose()?
                .unwrap_or(0),
        };
        if entries.insert(arch_id.clone(), entry).is_some() {
            return Err(BenchError::Schema {
                row,
                msg: format!("duplicate arch_id {arch_id:?}"),
            });
        }
    }
    let devices = device_cols.iter().map(|(d, _)| d.clone()).collect();
    let partial = match mapping.space {
        Space::Nb201 => entries.len() != 15_625,
        Space::Nb101 => true,
    };
    let table = BenchmarkTable {
        space: mapping.space,
        entries,
        devices,
        partial,
        generator: None,
    };
    table.validate()?;
    Ok(table)
}
