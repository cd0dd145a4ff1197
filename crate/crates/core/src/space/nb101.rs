//! NB-101 cell ingestion from an external cell list.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cell::{CellGraph, NodeRef, OpKind};
use super::SpaceError;

/// One NB-101 cell as stored in a JSON cell list.
///
/// `ops` uses the upstream names and includes the input/output endpoints;
/// `adjacency` is the upstream row-major 0/1 matrix over the same node order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Nb101Cell {
    pub id: String,
    pub ops: Vec<String>,
    pub adjacency: Vec<Vec<u8>>,
}

fn op_from_upstream(name: &str) -> Result<Option<OpKind>, SpaceError> {
    match name {
        "input" => Ok(None),
        "output" => Ok(None),
        "conv1x1-bn-relu" => Ok(Some(OpKind::Conv1x1)),
        "conv3x3-bn-relu" => Ok(Some(OpKind::Conv3x3)),
        "maxpool3x3" => Ok(Some(OpKind::MaxPool3x3)),
        other => Err(SpaceError::UnknownOp {
            token: other.to_string(),
        }),
    }
}

impl Nb101Cell {
    /// Converts the upstream representation into a [`CellGraph`].
    pub fn to_cell(&self) -> Result<CellGraph, SpaceError> {
        let n = self.ops.len();
        if n < 2 || n > 7 {
            return Err(SpaceError::InvalidCell(format!(
                "NB-101 cell {} has {} nodes, expected 2..=7",
                self.id, n
            )));
        }
        if self.ops[0] != "input" || self.ops[n - 1] != "output" {
            return Err(SpaceError::InvalidCell(format!(
                "NB-101 cell {} must start with input and end with output",
                self.id
            )));
        }
        if self.adjacency.len() != n || self.adjacency.iter().any(|row| row.len() != n) {
            return Err(SpaceError::InvalidCell(format!(
                "NB-101 cell {} adjacency is not {n}x{n}",
                self.id
            )));
        }
        let mut ops = Vec::new();
        for name in &self.ops[1..n - 1] {
            match op_from_upstream(name)? {
                Some(kind) => ops.push(kind),
                None => {
                    return Err(SpaceError::InvalidCell(format!(
                        "NB-101 cell {}: {name:?} in an interior position",
                        self.id
                    )))
                }
            }
        }
        let map = |i: usize| -> NodeRef {
            if i == 0 {
                NodeRef::Input
            } else if i == n - 1 {
                NodeRef::Output
            } else {
                NodeRef::Op(i - 1)
            }
        };
        let mut edges = Vec::new();
        for (i, row) in self.adjacency.iter().enumerate() {
            for (j, &bit) in row.iter().enumerate() {
                if bit != 0 {
                    edges.push((map(i), map(j)));
                }
            }
        }
        CellGraph::nb101(ops, edges, self.id.clone())
    }
}

/// Loads NB-101 cells from a JSON array file.
pub fn load_nb101_cells(path: impl AsRef<Path>) -> Result<Vec<CellGraph>, SpaceError> {
    let raw = fs::read_to_string(path)?;
    let cells: Vec<Nb101Cell> = serde_json::from_str(&raw)?;
    cells.iter().map(Nb101Cell::to_cell).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Nb101Cell {
        Nb101Cell {
            id: "abc123".into(),
            ops: vec![
                "input".into(),
                "conv3x3-bn-relu".into(),
                "maxpool3x3".into(),
                "output".into(),
            ],
            adjacency: vec![
                vec![0, 1, 1, 0],
                vec![0, 0, 0, 1],
                vec![0, 0, 0, 1],
                vec![0, 0, 0, 0],
            ],
        }
    }

    #[test]
    fn converts_upstream_cell() {
        let cell = sample().to_cell().unwrap();
        assert_eq!(cell.nodes, vec![OpKind::Conv3x3, OpKind::MaxPool3x3]);
        assert_eq!(cell.arch_id, "abc123");
        assert_eq!(cell.input_output_paths().len(), 2);
    }

    #[test]
    fn loads_json_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.json");
        std::fs::write(&path, serde_json::to_string(&vec![sample()]).unwrap()).unwrap();
        let cells = load_nb101_cells(&path).unwrap();
        assert_eq!(cells.len(), 1);
    }

    #[test]
    fn rejects_unknown_upstream_op() {
        let mut c = sample();
        c.ops[1] = "sep_conv_5x5".into();
        assert!(matches!(c.to_cell(), Err(SpaceError::UnknownOp { .. })));
    }
}
