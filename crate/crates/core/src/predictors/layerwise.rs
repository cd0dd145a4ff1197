//! Layer-wise latency baseline and the FLOPS proxy.
//!
//! The layer-wise model assumes sequential execution: predicted latency is a
//! calibrated scale times the sum of per-operation costs of the attached
//! operations, plus an additive overhead.

use std::collections::BTreeMap;
use std::io::Read;

use super::PredictorError;
use crate::bench::{BenchmarkTable, DeviceProfile};
use crate::space::{optimize_graph, CellGraph, OpKind};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerwiseCostModel {
    pub per_op_cost: BTreeMap<OpKind, f64>,
    pub scale: f64,
    pub overhead: f64,
}

impl LayerwiseCostModel {
    pub fn new(per_op_cost: BTreeMap<OpKind, f64>) -> Self {
        LayerwiseCostModel {
            per_op_cost,
            scale: 1.0,
            overhead: 0.0,
        }
    }

    /// Costs taken from a synthetic device profile (microbenchmark stand-in).
    pub fn from_profile(profile: &DeviceProfile) -> Self {
        LayerwiseCostModel::new(BTreeMap::from([
            (OpKind::Conv1x1, profile.cost_conv1x1_ms),
            (OpKind::Conv3x3, profile.cost_conv3x3_ms),
            (OpKind::AvgPool3x3, profile.cost_pool_ms),
            (OpKind::MaxPool3x3, profile.cost_pool_ms),
        ]))
    }

    /// Uncalibrated sum of attached-operation costs.
    pub fn raw_sum(&self, cell: &CellGraph) -> f64 {
        let opt = optimize_graph(cell);
        opt.attached_ops()
            .map(|(_, kind)| self.per_op_cost.get(&kind).copied().unwrap_or(0.0))
            .sum()
    }
}

/// `scale · Σ per-op costs + overhead` over the optimized cell.
pub fn layerwise_predict(model: &LayerwiseCostModel, cell: &CellGraph) -> f64 {
    model.scale * model.raw_sum(cell) + model.overhead
}

/// Least-squares scale fit: `scale = Σ(raw·meas) / Σ(raw²)`.
pub fn layerwise_calibrate(
    model: &LayerwiseCostModel,
    train: &[(&CellGraph, f64)],
) -> Result<LayerwiseCostModel, PredictorError> {
    if train.is_empty() {
        return Err(PredictorError::Usage("empty calibration set".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (cell, measured) in train {
        let raw = model.raw_sum(cell);
        num += raw * measured;
        den += raw * raw;
    }
    if den == 0.0 {
        return Err(PredictorError::DegenerateCalibration(
            "all calibration cells have zero raw cost".into(),
        ));
    }
    Ok(LayerwiseCostModel {
        per_op_cost: model.per_op_cost.clone(),
        scale: num / den,
        overhead: model.overhead,
    })
}

/// FLOPS as an ordering score for a model.
pub fn flops_proxy(table: &BenchmarkTable, arch_id: &str) -> Result<f64, PredictorError> {
    Ok(table.query_flops(arch_id)? as f64)
}

/// Reads per-op microbenchmark costs: CSV columns `op_name, device, cost_ms`.
/// Recognized op names: `conv1x1`, `conv3x3`, `avg_pool3x3`, `max_pool3x3`,
/// `pool` (both pool kinds).
pub fn load_op_costs_csv(
    r: impl Read,
) -> Result<BTreeMap<String, BTreeMap<OpKind, f64>>, PredictorError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out: BTreeMap<String, BTreeMap<OpKind, f64>> = BTreeMap::new();
    for record in rdr.deserialize() {
        let (op_name, device, cost_ms): (String, String, f64) = record?;
        if !(cost_ms > 0.0) {
            return Err(PredictorError::Usage(format!(
                "non-positive cost for {op_name} on {device}"
            )));
        }
        let kinds: &[OpKind] = match op_name.as_str() {
            "conv1x1" => &[OpKind::Conv1x1],
            "conv3x3" => &[OpKind::Conv3x3],
            "avg_pool3x3" => &[OpKind::AvgPool3x3],
            "max_pool3x3" => &[OpKind::MaxPool3x3],
            "pool" => &[OpKind::AvgPool3x3, OpKind::MaxPool3x3],
            other => {
                return Err(PredictorError::Usage(format!("unknown op name {other:?}")))
            }
        };
        let entry = out.entry(device).or_default();
        for &k in kinds {
            entry.insert(k, cost_ms);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{parse_arch_string, Space};

    fn unit_costs() -> LayerwiseCostModel {
        LayerwiseCostModel::new(BTreeMap::from([
            (OpKind::Conv1x1, 1.0),
            (OpKind::Conv3x3, 1.0),
            (OpKind::AvgPool3x3, 1.0),
            (OpKind::MaxPool3x3, 1.0),
        ]))
    }

    #[test]
    fn all_zero_cell_predicts_overhead_only() {
        let mut model = unit_costs();
        model.overhead = 0.25;
        let cell =
            parse_arch_string("|none~0|+|none~0|none~1|+|none~0|none~1|none~2|").unwrap();
        assert_eq!(layerwise_predict(&model, &cell), 0.25);
    }

    #[test]
    fn single_op_with_scale() {
        let mut model = LayerwiseCostModel::new(BTreeMap::from([(OpKind::Conv3x3, 1.0)]));
        model.scale = 2.0;
        let cell = parse_arch_string(
            "|none~0|+|none~0|none~1|+|nor_conv_3x3~0|none~1|none~2|",
        )
        .unwrap();
        assert_eq!(layerwise_predict(&model, &cell), 2.0);
    }

    #[test]
    fn exact_fit_calibration() {
        let model = unit_costs();
        let cells: Vec<CellGraph> = crate::space::enumerate_space(Space::Nb201)
            .unwrap()
            .step_by(1234)
            .take(12)
            .collect();
        // measured exactly twice the raw sums -> scale 2, zero residual
        let data: Vec<(&CellGraph, f64)> = cells
            .iter()
            .map(|c| (c, 2.0 * model.raw_sum(c)))
            .filter(|(_, m)| *m > 0.0)
            .collect();
        let fit = layerwise_calibrate(&model, &data).unwrap();
        assert!((fit.scale - 2.0).abs() < 1e-12);
        for (cell, measured) in &data {
            assert!((layerwise_predict(&fit, cell) - measured).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_closed_form() {
        let model = unit_costs();
        // cell with raw sum 4
        let cell = parse_arch_string(
            "|nor_conv_3x3~0|+|nor_conv_1x1~0|nor_conv_3x3~1|+|none~0|none~1|avg_pool_3x3~2|",
        )
        .unwrap();
        assert_eq!(model.raw_sum(&cell), 4.0);
        let fit = layerwise_calibrate(&model, &[(&cell, 10.0)]).unwrap();
        assert!((fit.scale - 2.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_calibration_is_an_error() {
        let model = unit_costs();
        let zero = parse_arch_string("|none~0|+|none~0|none~1|+|none~0|none~1|none~2|").unwrap();
        assert!(matches!(
            layerwise_calibrate(&model, &[(&zero, 1.0)]),
            Err(PredictorError::DegenerateCalibration(_))
        ));
    }

    #[test]
    fn additivity_of_prediction() {
        // summation oracle: prediction minus overhead is additive over ops
        let model = unit_costs();
        for cell in crate::space::enumerate_space(Space::Nb201).unwrap().step_by(601) {
            let opt = optimize_graph(&cell);
            let expected: f64 = opt.attached_ops().map(|_| 1.0).sum();
            assert!((layerwise_predict(&model, &cell) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn op_cost_csv_parses() {
        let csv = "op_name,device,cost_ms\nconv3x3,cpu,0.8\nconv1x1,cpu,0.3\npool,cpu,0.2\n";
        let costs = load_op_costs_csv(csv.as_bytes()).unwrap();
        assert_eq!(costs["cpu"][&OpKind::Conv3x3], 0.8);
        assert_eq!(costs["cpu"][&OpKind::AvgPool3x3], 0.2);
        assert_eq!(costs["cpu"][&OpKind::MaxPool3x3], 0.2);
    }
}
