//! Cell graphs: operations, wiring, parsing and enumeration.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SpaceError;

/// The tabular search spaces understood by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Nb201,
    Nb101,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Nb201 => write!(f, "nb201"),
            Space::Nb101 => write!(f, "nb101"),
        }
    }
}

/// Node label: a searchable operation or a structural role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpKind {
    Zero,
    Skip,
    Conv1x1,
    Conv3x3,
    AvgPool3x3,
    MaxPool3x3,
    Input,
    Output,
    Global,
}

impl OpKind {
    /// True for labels that may appear on an operation node of `space`.
    pub fn is_searchable(self, space: Space) -> bool {
        match space {
            Space::Nb201 => matches!(
                self,
                OpKind::Zero | OpKind::Skip | OpKind::Conv1x1 | OpKind::Conv3x3 | OpKind::AvgPool3x3
            ),
            Space::Nb101 => {
                matches!(self, OpKind::Conv1x1 | OpKind::Conv3x3 | OpKind::MaxPool3x3)
            }
        }
    }
}

/// NB-201 operation names in canonical (enumeration) order.
pub const NB201_OPS: [(&str, OpKind); 5] = [
    ("none", OpKind::Zero),
    ("skip_connect", OpKind::Skip),
    ("nor_conv_1x1", OpKind::Conv1x1),
    ("nor_conv_3x3", OpKind::Conv3x3),
    ("avg_pool_3x3", OpKind::AvgPool3x3),
];

/// Number of operation slots in an NB-201 cell.
pub const NB201_SLOTS: usize = 6;

fn nb201_op_name(kind: OpKind) -> &'static str {
    NB201_OPS
        .iter()
        .find(|(_, k)| *k == kind)
        .map(|(n, _)| *n)
        .expect("not an NB-201 op")
}

/// Reference to a node of the cell graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeRef {
    Input,
    Op(usize),
    Output,
}

/// A NAS cell as a node-labeled DAG.
///
/// `nodes` holds the operation nodes only; input and output are implicit
/// endpoints referenced through [`NodeRef`]. `attached` marks which operation
/// nodes still carry data after graph optimization — detached nodes stay in
/// place as typeless placeholders so the encoded size is fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellGraph {
    pub space: Space,
    pub nodes: Vec<OpKind>,
    pub edges: Vec<(NodeRef, NodeRef)>,
    pub attached: Vec<bool>,
    pub arch_id: String,
}

impl CellGraph {
    /// Builds an NB-201 cell from its six slot operations.
    ///
    /// Slots correspond to the edges of the original tensor DAG in
    /// architecture-string order; the node-labeled wiring is fixed.
    pub fn nb201(ops: [OpKind; NB201_SLOTS]) -> Result<Self, SpaceError> {
        for op in ops {
            if !op.is_searchable(Space::Nb201) {
                return Err(SpaceError::InvalidCell(format!(
                    "{op:?} is not an NB-201 operation"
                )));
            }
        }
        let arch_id = nb201_arch_string(&ops);
        Ok(CellGraph {
            space: Space::Nb201,
            nodes: ops.to_vec(),
            edges: nb201_wiring(),
            attached: vec![true; NB201_SLOTS],
            arch_id,
        })
    }

    /// Builds an NB-101 cell from operation labels and a DAG over
    /// `[input, op_0, .., op_{k-1}, output]` indices.
    pub fn nb101(
        ops: Vec<OpKind>,
        edges: Vec<(NodeRef, NodeRef)>,
        arch_id: String,
    ) -> Result<Self, SpaceError> {
        if ops.len() > 5 {
            return Err(SpaceError::InvalidCell(format!(
                "NB-101 cells have at most 5 operation nodes, got {}",
                ops.len()
            )));
        }
        for op in &ops {
            if !op.is_searchable(Space::Nb101) {
                return Err(SpaceError::InvalidCell(format!(
                    "{op:?} is not an NB-101 operation"
                )));
            }
        }
        let n_ops = ops.len();
        let mut seen = BTreeSet::new();
        for &(u, v) in &edges {
            for r in [u, v] {
                if let NodeRef::Op(i) = r {
                    if i >= n_ops {
                        return Err(SpaceError::InvalidCell(format!(
                            "edge references missing op node {i}"
                        )));
                    }
                }
            }
            if u == v {
                return Err(SpaceError::InvalidCell("self-edge in cell".into()));
            }
            seen.insert((u, v));
        }
        let attached = vec![true; n_ops];
        let cell = CellGraph {
            space: Space::Nb101,
            nodes: ops,
            edges: seen.into_iter().collect(),
            attached,
            arch_id,
        };
        if cell.has_cycle() {
            return Err(SpaceError::InvalidCell("cell graph contains a cycle".into()));
        }
        Ok(cell)
    }

    /// Successor node references of `node` over the current edge set.
    pub fn successors(&self, node: NodeRef) -> Vec<NodeRef> {
        self.edges
            .iter()
            .filter(|(u, _)| *u == node)
            .map(|&(_, v)| v)
            .collect()
    }

    /// Predecessor node references of `node` over the current edge set.
    pub fn predecessors(&self, node: NodeRef) -> Vec<NodeRef> {
        self.edges
            .iter()
            .filter(|(_, v)| *v == node)
            .map(|&(u, _)| u)
            .collect()
    }

    fn has_cycle(&self) -> bool {
        // DFS over op nodes; Input/Output cannot participate in a cycle
        // because Input has no predecessors and Output no successors here.
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Grey,
            Black,
        }
        fn visit(cell: &CellGraph, i: usize, marks: &mut [Mark]) -> bool {
            marks[i] = Mark::Grey;
            for succ in cell.successors(NodeRef::Op(i)) {
                if let NodeRef::Op(j) = succ {
                    match marks[j] {
                        Mark::Grey => return true,
                        Mark::White => {
                            if visit(cell, j, marks) {
                                return true;
                            }
                        }
                        Mark::Black => {}
                    }
                }
            }
            marks[i] = Mark::Black;
            false
        }
        let mut marks = vec![Mark::White; self.nodes.len()];
        (0..self.nodes.len()).any(|i| marks[i] == Mark::White && visit(self, i, &mut marks))
    }

    /// All simple input→output paths as sequences of op-node indices.
    ///
    /// The empty sequence denotes a direct input→output edge. Deterministic
    /// order (DFS over ascending successors).
    pub fn input_output_paths(&self) -> Vec<Vec<usize>> {
        let mut paths = Vec::new();
        let mut stack = Vec::new();
        self.path_dfs(NodeRef::Input, &mut stack, &mut paths);
        paths
    }

    fn path_dfs(&self, node: NodeRef, stack: &mut Vec<usize>, paths: &mut Vec<Vec<usize>>) {
        let mut succs = self.successors(node);
        succs.sort();
        for succ in succs {
            match succ {
                NodeRef::Output => paths.push(stack.clone()),
                NodeRef::Op(i) => {
                    stack.push(i);
                    self.path_dfs(succ, stack, paths);
                    stack.pop();
                }
                NodeRef::Input => unreachable!("input has no incoming edges"),
            }
        }
    }

    /// Distinct input→output paths as operation-kind sequences.
    pub fn op_paths(&self) -> BTreeSet<Vec<OpKind>> {
        self.input_output_paths()
            .into_iter()
            .map(|p| p.into_iter().map(|i| self.nodes[i]).collect())
            .collect()
    }

    /// Indices and kinds of attached operation nodes.
    pub fn attached_ops(&self) -> impl Iterator<Item = (usize, OpKind)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.attached[*i])
            .map(|(i, k)| (i, *k))
    }
}

/// The fixed node-labeled wiring of an NB-201 cell.
///
/// Tensor nodes 0..3 of the original edge-labeled form become the implicit
/// input (tensor 0) and output (tensor 3); the six labeled edges become
/// operation nodes 0..5 in architecture-string order.
fn nb201_wiring() -> Vec<(NodeRef, NodeRef)> {
    use NodeRef::*;
    vec![
        (Input, Op(0)),
        (Input, Op(1)),
        (Input, Op(3)),
        (Op(0), Op(2)),
        (Op(0), Op(4)),
        (Op(1), Op(5)),
        (Op(2), Op(5)),
        (Op(3), Output),
        (Op(4), Output),
        (Op(5), Output),
    ]
}

fn nb201_arch_string(ops: &[OpKind; NB201_SLOTS]) -> String {
    format!(
        "|{}~0|+|{}~0|{}~1|+|{}~0|{}~1|{}~2|",
        nb201_op_name(ops[0]),
        nb201_op_name(ops[1]),
        nb201_op_name(ops[2]),
        nb201_op_name(ops[3]),
        nb201_op_name(ops[4]),
        nb201_op_name(ops[5]),
    )
}

fn nb201_op_from_name(name: &str) -> Result<OpKind, SpaceError> {
    NB201_OPS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, k)| *k)
        .ok_or_else(|| SpaceError::UnknownOp {
            token: name.to_string(),
        })
}

/// Parses an NB-201 architecture string into a cell graph.
///
/// The accepted grammar is `|O1~0|+|O2~0|O3~1|+|O4~0|O5~1|O6~2|` with each
/// `Oi` one of the five NB-201 operation names.
pub fn parse_arch_string(s: &str) -> Result<CellGraph, SpaceError> {
    let stages: Vec<&str> = s.split('+').collect();
    if stages.len() != 3 {
        return Err(SpaceError::Parse {
            token: s.to_string(),
            reason: format!("expected 3 '+'-separated stages, found {}", stages.len()),
        });
    }
    let mut ops = Vec::with_capacity(NB201_SLOTS);
    for (stage_idx, stage) in stages.iter().enumerate() {
        let inner = stage
            .strip_prefix('|')
            .and_then(|t| t.strip_suffix('|'))
            .ok_or_else(|| SpaceError::Parse {
                token: stage.to_string(),
                reason: "stage must be delimited by '|'".into(),
            })?;
        let tokens: Vec<&str> = inner.split('|').collect();
        if tokens.len() != stage_idx + 1 {
            return Err(SpaceError::Parse {
                token: stage.to_string(),
                reason: format!(
                    "stage {} must contain {} operations, found {}",
                    stage_idx + 1,
                    stage_idx + 1,
                    tokens.len()
                ),
            });
        }
        for (tok_idx, tok) in tokens.iter().enumerate() {
            let (name, src) = tok.rsplit_once('~').ok_or_else(|| SpaceError::Parse {
                token: tok.to_string(),
                reason: "missing '~' source marker".into(),
            })?;
            if src != tok_idx.to_string() {
                return Err(SpaceError::Parse {
                    token: tok.to_string(),
                    reason: format!("expected source index {tok_idx}"),
                });
            }
            ops.push(nb201_op_from_name(name)?);
        }
    }
    let ops: [OpKind; NB201_SLOTS] = ops.try_into().expect("six slots by construction");
    CellGraph::nb201(ops)
}

/// Enumerates every cell of a space in a fixed, documented order.
///
/// NB-201 yields all 5^6 = 15,625 cells with the last slot varying fastest
/// and operations ordered as in [`NB201_OPS`] (so the all-`none` cell comes
/// first). NB-101 has no closed-form enumeration here: ingest an external
/// cell list via [`super::load_nb101_cells`] instead.
pub fn enumerate_space(space: Space) -> Result<impl Iterator<Item = CellGraph>, SpaceError> {
    match space {
        Space::Nb201 => {
            let n = NB201_OPS.len();
            let total = n.pow(NB201_SLOTS as u32);
            Ok((0..total).map(move |mut code| {
                let mut ops = [OpKind::Zero; NB201_SLOTS];
                for slot in (0..NB201_SLOTS).rev() {
                    ops[slot] = NB201_OPS[code % n].1;
                    code /= n;
                }
                CellGraph::nb201(ops).expect("enumerated ops are valid")
            }))
        }
        Space::Nb101 => Err(SpaceError::UnsupportedEnumeration(space)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn parse_positional_kinds() {
        let s = "|nor_conv_3x3~0|+|none~0|nor_conv_3x3~1|+|skip_connect~0|none~1|nor_conv_1x1~2|";
        let cell = parse_arch_string(s).unwrap();
        assert_eq!(
            cell.nodes,
            vec![
                OpKind::Conv3x3,
                OpKind::Zero,
                OpKind::Conv3x3,
                OpKind::Skip,
                OpKind::Zero,
                OpKind::Conv1x1
            ]
        );
        assert_eq!(cell.arch_id, s);
    }

    #[test]
    fn parse_all_none() {
        let s = "|none~0|+|none~0|none~1|+|none~0|none~1|none~2|";
        let cell = parse_arch_string(s).unwrap();
        assert!(cell.nodes.iter().all(|op| *op == OpKind::Zero));
    }

    #[test]
    fn parse_rejects_unknown_op() {
        let s = "|conv7x7~0|+|none~0|none~1|+|none~0|none~1|none~2|";
        match parse_arch_string(s) {
            Err(SpaceError::UnknownOp { token }) => assert_eq!(token, "conv7x7"),
            other => panic!("expected UnknownOp, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_malformed_structure() {
        assert!(matches!(
            parse_arch_string("|none~0|+|none~0|none~1|"),
            Err(SpaceError::Parse { .. })
        ));
        assert!(matches!(
            parse_arch_string("|none~1|+|none~0|none~1|+|none~0|none~1|none~2|"),
            Err(SpaceError::Parse { .. })
        ));
        assert!(matches!(
            parse_arch_string("none~0|+|none~0|none~1|+|none~0|none~1|none~2|"),
            Err(SpaceError::Parse { .. })
        ));
    }

    #[test]
    fn enumeration_is_complete_and_distinct() {
        let cells: Vec<CellGraph> = enumerate_space(Space::Nb201).unwrap().collect();
        assert_eq!(cells.len(), 15_625);
        let ids: HashSet<&str> = cells.iter().map(|c| c.arch_id.as_str()).collect();
        assert_eq!(ids.len(), 15_625);
        // first cell is the all-none string
        assert_eq!(
            cells[0].arch_id,
            "|none~0|+|none~0|none~1|+|none~0|none~1|none~2|"
        );
    }

    #[test]
    fn enumeration_round_trips_through_parse() {
        for cell in enumerate_space(Space::Nb201).unwrap().step_by(371) {
            let reparsed = parse_arch_string(&cell.arch_id).unwrap();
            assert_eq!(reparsed, cell);
        }
    }

    #[test]
    fn nb101_rejects_cycles_and_bad_ops() {
        use NodeRef::*;
        let err = CellGraph::nb101(
            vec![OpKind::Conv3x3, OpKind::Conv1x1],
            vec![(Op(0), Op(1)), (Op(1), Op(0))],
            "cyc".into(),
        );
        assert!(matches!(err, Err(SpaceError::InvalidCell(_))));
        let err = CellGraph::nb101(vec![OpKind::AvgPool3x3], vec![], "badop".into());
        assert!(matches!(err, Err(SpaceError::InvalidCell(_))));
    }

    #[test]
    fn nb101_enumeration_unsupported() {
        assert!(matches!(
            enumerate_space(Space::Nb101).err(),
            Some(SpaceError::UnsupportedEnumeration(Space::Nb101))
        ));
    }

    #[test]
    fn nb201_paths_of_full_cell() {
        let cell = CellGraph::nb201([OpKind::Conv3x3; 6]).unwrap();
        let paths = cell.input_output_paths();
        // direct edge slot 3, two 2-op paths, one 3-op path
        assert_eq!(paths.len(), 4);
        assert!(paths.contains(&vec![3]));
        assert!(paths.contains(&vec![0, 4]));
        assert!(paths.contains(&vec![1, 5]));
        assert!(paths.contains(&vec![0, 2, 5]));
    }
}
