//! Path-set equivalence between the optimized node-labeled graph and an
//! independent interpreter of the original edge-labeled cell.

use std::collections::BTreeSet;

use hwnas_core::space::{enumerate_space, optimize_graph, CellGraph, OpKind, Space};
use rand::prelude::*;
use rand_chacha::ChaCha20Rng;

/// Brute-force oracle over the original NB-201 tensor DAG: walks every
/// tensor path input(0) → output(3), where a zero edge kills the path and a
/// skip edge contributes no operation.
fn oracle_op_paths(ops: &[OpKind; 6]) -> BTreeSet<Vec<OpKind>> {
    // (src tensor, dst tensor, op slot) in architecture-string order
    const EDGES: [(usize, usize, usize); 6] =
        [(0, 1, 0), (0, 2, 1), (1, 2, 2), (0, 3, 3), (1, 3, 4), (2, 3, 5)];
    let mut paths = BTreeSet::new();
    let mut stack: Vec<OpKind> = Vec::new();
    fn walk(
        tensor: usize,
        ops: &[OpKind; 6],
        stack: &mut Vec<OpKind>,
        paths: &mut BTreeSet<Vec<OpKind>>,
    ) {
        if tensor == 3 {
            paths.insert(stack.clone());
            return;
        }
        for &(src, dst, slot) in EDGES.iter() {
            if src != tensor {
                continue;
            }
            match ops[slot] {
                OpKind::Zero => {}
                OpKind::Skip => walk(dst, ops, stack, paths),
                op => {
                    stack.push(op);
                    walk(dst, ops, stack, paths);
                    stack.pop();
                }
            }
        }
    }
    walk(0, ops, &mut stack, &mut paths);
    paths
}

fn random_cell(rng: &mut ChaCha20Rng) -> CellGraph {
    use hwnas_core::space::NB201_OPS;
    let ops: Vec<OpKind> = (0..6)
        .map(|_| NB201_OPS[rng.random_range(0..NB201_OPS.len())].1)
        .collect();
    CellGraph::nb201(ops.try_into().unwrap()).unwrap()
}

#[test]
fn optimized_paths_match_the_interpreter_on_random_cells() {
    let mut rng = ChaCha20Rng::seed_from_u64(2021);
    for _ in 0..500 {
        let cell = random_cell(&mut rng);
        let ops: [OpKind; 6] = cell.nodes.clone().try_into().unwrap();
        let expected = oracle_op_paths(&ops);
        let optimized = optimize_graph(&cell);
        assert_eq!(
            optimized.op_paths(),
            expected,
            "path sets differ for {}",
            cell.arch_id
        );
    }
}

#[test]
fn optimized_paths_match_on_handpicked_cells() {
    // cells covering skip chains, dead branches and the empty path
    let cases = [
        "|none~0|+|none~0|none~1|+|none~0|none~1|none~2|",
        "|skip_connect~0|+|skip_connect~0|skip_connect~1|+|skip_connect~0|skip_connect~1|skip_connect~2|",
        "|nor_conv_3x3~0|+|none~0|nor_conv_3x3~1|+|skip_connect~0|none~1|nor_conv_1x1~2|",
        "|skip_connect~0|+|nor_conv_1x1~0|skip_connect~1|+|none~0|avg_pool_3x3~1|nor_conv_3x3~2|",
        "|nor_conv_1x1~0|+|skip_connect~0|skip_connect~1|+|skip_connect~0|skip_connect~1|skip_connect~2|",
    ];
    for s in cases {
        let cell = hwnas_core::space::parse_arch_string(s).unwrap();
        let ops: [OpKind; 6] = cell.nodes.clone().try_into().unwrap();
        assert_eq!(
            optimize_graph(&cell).op_paths(),
            oracle_op_paths(&ops),
            "path sets differ for {s}"
        );
    }
}

#[test]
fn full_enumeration_is_distinct_and_encodes_to_fixed_shape() {
    let mut ids = BTreeSet::new();
    let mut count = 0usize;
    for cell in enumerate_space(Space::Nb201).unwrap() {
        count += 1;
        assert!(ids.insert(cell.arch_id.clone()), "duplicate {}", cell.arch_id);
        if count % 271 == 0 {
            let g = hwnas_core::space::encode(&cell);
            assert_eq!((g.n(), g.d()), (9, 6));
        }
    }
    assert_eq!(count, 15_625);
}
