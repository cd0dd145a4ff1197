//! Comparator ranking.
//!
//! The learned relation is not guaranteed transitive, so candidates are
//! sorted with a hand-rolled stable merge sort that tolerates inconsistent
//! comparators (the standard sort may panic on them). Exact-0.5 comparisons
//! are ties and keep input order.

use super::binary::BinaryPredictor;
use super::PredictorError;
use crate::space::EncodedGraph;

/// Stable merge sort by a "goes-before" predicate; returns the sorted items
/// and the number of comparator calls (bounded by n·⌈log₂ n⌉).
pub fn rank_by_comparator<T: Clone>(
    items: &[T],
    before: &mut impl FnMut(&T, &T) -> bool,
) -> (Vec<T>, usize) {
    let mut calls = 0usize;
    let mut buf: Vec<T> = items.to_vec();
    let mut scratch: Vec<T> = items.to_vec();
    let n = buf.len();
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            if mid < hi {
                merge(&buf[lo..mid], &buf[mid..hi], &mut scratch[lo..hi], before, &mut calls);
                buf[lo..hi].clone_from_slice(&scratch[lo..hi]);
            }
            lo = hi;
        }
        width *= 2;
    }
    (buf, calls)
}

fn merge<T: Clone>(
    left: &[T],
    right: &[T],
    out: &mut [T],
    before: &mut impl FnMut(&T, &T) -> bool,
    calls: &mut usize,
) {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < left.len() && j < right.len() {
        *calls += 1;
        // take from the right only when it strictly precedes: ties stay stable
        if before(&right[j], &left[i]) {
            out[k] = right[j].clone();
            j += 1;
        } else {
            out[k] = left[i].clone();
            i += 1;
        }
        k += 1;
    }
    while i < left.len() {
        out[k] = left[i].clone();
        i += 1;
        k += 1;
    }
    while j < right.len() {
        out[k] = right[j].clone();
        j += 1;
        k += 1;
    }
}

/// Sorts candidate indices best-first using the relation predictor as the
/// comparator (`a` before `b` iff p₁(a, b) > 0.5). Trunk embeddings are
/// computed once; each comparison is a head evaluation. Returns the ordering
/// and the comparator call count.
pub fn rank_candidates(
    bp: &BinaryPredictor,
    graphs: &[&EncodedGraph],
) -> Result<(Vec<usize>, usize), PredictorError> {
    if graphs.is_empty() {
        return Ok((Vec::new(), 0));
    }
    let emb = bp.embed_all(graphs)?;
    let rows: Vec<Vec<f64>> = (0..graphs.len()).map(|i| emb.row(i).to_vec()).collect();
    let indices: Vec<usize> = (0..graphs.len()).collect();
    let mut before = |a: &usize, b: &usize| {
        let (p1, _) = {
            let pa = &rows[*a];
            let pb = &rows[*b];
            bp.probabilities_from_embeddings(pa, pb)
        };
        p1 > 0.5
    };
    let (order, calls) = rank_by_comparator(&indices, &mut before);
    Ok((order, calls))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_candidate_unchanged() {
        let (order, calls) = rank_by_comparator(&[42usize], &mut |_, _| false);
        assert_eq!(order, vec![42]);
        assert_eq!(calls, 0);
    }

    #[test]
    fn oracle_comparator_sorts_exactly() {
        let items: Vec<i64> = vec![5, -3, 9, 0, 2, 2, 8, -7, 1];
        let (order, _) = rank_by_comparator(&items, &mut |a, b| a > b);
        let mut expected = items.clone();
        expected.sort_by(|a, b| b.cmp(a));
        assert_eq!(order, expected);
    }

    #[test]
    fn ties_keep_input_order() {
        #[derive(Clone, Debug, PartialEq)]
        struct Tagged(i64, usize);
        let items: Vec<Tagged> = vec![
            Tagged(1, 0),
            Tagged(0, 1),
            Tagged(1, 2),
            Tagged(0, 3),
            Tagged(1, 4),
        ];
        // comparator only sees the value: equal values are exact ties
        let (order, _) = rank_by_comparator(&items, &mut |a, b| a.0 > b.0);
        assert_eq!(
            order,
            vec![Tagged(1, 0), Tagged(1, 2), Tagged(1, 4), Tagged(0, 1), Tagged(0, 3)]
        );
    }

    #[test]
    fn call_count_is_n_log_n() {
        let n = 15_625usize;
        let items: Vec<usize> = (0..n).rev().collect();
        let (order, calls) = rank_by_comparator(&items, &mut |a, b| a > b);
        assert_eq!(order[0], n - 1);
        let bound = (2.0 * n as f64 * (n as f64).log2()) as usize;
        assert!(calls < bound, "{calls} comparator calls >= {bound}");
    }

    #[test]
    fn survives_inconsistent_comparators() {
        // rock-paper-scissors relation must not panic or loop
        let items = vec![0usize, 1, 2];
        let mut before = |a: &usize, b: &usize| matches!((a, b), (0, 1) | (1, 2) | (2, 0));
        let (order, _) = rank_by_comparator(&items, &mut before);
        assert_eq!(order.len(), 3);
    }
}
