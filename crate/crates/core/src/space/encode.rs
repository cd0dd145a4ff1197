//! Graph optimization and the matrix encoding consumed by the GCN.

use std::collections::BTreeSet;

use ndarray::Array2;

use super::cell::{CellGraph, NodeRef, OpKind, Space};

/// One-hot feature columns. Average and max pooling share the pool column;
/// zero and skip never survive optimization so they have no column.
pub const FEAT_CONV1X1: usize = 0;
pub const FEAT_CONV3X3: usize = 1;
pub const FEAT_POOL: usize = 2;
pub const FEAT_INPUT: usize = 3;
pub const FEAT_OUTPUT: usize = 4;
pub const FEAT_GLOBAL: usize = 5;
/// Feature width D of every encoded graph.
pub const FEATURE_DIM: usize = 6;

/// Adjacency and one-hot feature matrices of an optimized cell.
///
/// Node layout is `[input, op_0 .. op_{k-1}, output, global]` where `k` is
/// the slot count of the space (6 for NB-201, 5 for NB-101), giving N = 9
/// and N = 8 respectively. The adjacency holds the directed data edges
/// (row = source, column = destination), a self-loop on every node, and the
/// global node connected in both directions to every other node — including
/// detached ones. Rows of detached nodes in the feature matrix are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedGraph {
    pub space: Space,
    pub arch_id: String,
    pub adjacency: Array2<f64>,
    pub features: Array2<f64>,
}

impl EncodedGraph {
    /// Node count N.
    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    /// Feature width D.
    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// Row index of the global node.
    pub fn global_index(&self) -> usize {
        self.n() - 1
    }
}

/// Number of operation slots a space reserves in the encoding.
pub fn slot_count(space: Space) -> usize {
    match space {
        Space::Nb201 => 6,
        Space::Nb101 => 5,
    }
}

/// Removes zero operations, bypasses skip connections and detaches nodes
/// that no longer lie on any input→output path.
///
/// Detached nodes are kept at their original indices as typeless
/// placeholders; the function is idempotent.
pub fn optimize_graph(cell: &CellGraph) -> CellGraph {
    let mut edges: BTreeSet<(NodeRef, NodeRef)> = cell.edges.iter().copied().collect();
    let mut attached = cell.attached.clone();

    let remove_incident = |edges: &mut BTreeSet<(NodeRef, NodeRef)>, node: NodeRef| {
        edges.retain(|&(u, v)| u != node && v != node);
    };

    for (i, &kind) in cell.nodes.iter().enumerate() {
        if !attached[i] {
            continue;
        }
        let node = NodeRef::Op(i);
        match kind {
            OpKind::Zero => {
                remove_incident(&mut edges, node);
                attached[i] = false;
            }
            OpKind::Skip => {
                let preds: Vec<NodeRef> =
                    edges.iter().filter(|(_, v)| *v == node).map(|&(u, _)| u).collect();
                let succs: Vec<NodeRef> =
                    edges.iter().filter(|(u, _)| *u == node).map(|&(_, v)| v).collect();
                for &p in &preds {
                    for &s in &succs {
                        edges.insert((p, s));
                    }
                }
                remove_incident(&mut edges, node);
                attached[i] = false;
            }
            _ => {}
        }
    }

    // Detach everything not on an input→output path.
    let reach_from_input = reachable(&edges, NodeRef::Input, false);
    let reach_to_output = reachable(&edges, NodeRef::Output, true);
    for i in 0..cell.nodes.len() {
        if !attached[i] {
            continue;
        }
        let node = NodeRef::Op(i);
        if !(reach_from_input.contains(&node) && reach_to_output.contains(&node)) {
            remove_incident(&mut edges, node);
            attached[i] = false;
        }
    }

    CellGraph {
        space: cell.space,
        nodes: cell.nodes.clone(),
        edges: edges.into_iter().collect(),
        attached,
        arch_id: cell.arch_id.clone(),
    }
}

fn reachable(
    edges: &BTreeSet<(NodeRef, NodeRef)>,
    start: NodeRef,
    reverse: bool,
) -> BTreeSet<NodeRef> {
    let mut seen = BTreeSet::new();
    let mut frontier = vec![start];
    seen.insert(start);
    while let Some(node) = frontier.pop() {
        for &(u, v) in edges.iter() {
            let (from, to) = if reverse { (v, u) } else { (u, v) };
            if from == node && seen.insert(to) {
                frontier.push(to);
            }
        }
    }
    seen
}

/// Encodes a cell into its adjacency and feature matrices.
///
/// The cell is optimized first (a no-op when already optimized).
pub fn encode(cell: &CellGraph) -> EncodedGraph {
    let opt = optimize_graph(cell);
    let slots = slot_count(opt.space);
    let n = slots + 3;
    let index = |r: NodeRef| -> usize {
        match r {
            NodeRef::Input => 0,
            NodeRef::Op(i) => 1 + i,
            NodeRef::Output => slots + 1,
        }
    };
    let global = n - 1;

    let mut a = Array2::<f64>::zeros((n, n));
    for &(u, v) in &opt.edges {
        a[[index(u), index(v)]] = 1.0;
    }
    for i in 0..n {
        a[[i, i]] = 1.0;
    }
    for i in 0..n - 1 {
        a[[i, global]] = 1.0;
        a[[global, i]] = 1.0;
    }

    let mut x = Array2::<f64>::zeros((n, FEATURE_DIM));
    x[[0, FEAT_INPUT]] = 1.0;
    x[[slots + 1, FEAT_OUTPUT]] = 1.0;
    x[[global, FEAT_GLOBAL]] = 1.0;
    for (i, &kind) in opt.nodes.iter().enumerate() {
        if !opt.attached[i] {
            continue;
        }
        let col = match kind {
            OpKind::Conv1x1 => FEAT_CONV1X1,
            OpKind::Conv3x3 => FEAT_CONV3X3,
            OpKind::AvgPool3x3 | OpKind::MaxPool3x3 => FEAT_POOL,
            other => unreachable!("{other:?} survived optimization"),
        };
        x[[1 + i, col]] = 1.0;
    }

    EncodedGraph {
        space: opt.space,
        arch_id: opt.arch_id,
        adjacency: a,
        features: x,
    }
}
