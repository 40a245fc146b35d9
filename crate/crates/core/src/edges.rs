//! Fixed ordering of the edges of the complete graph `K_n`.
//!
//! Vertices are `0..n`. Edges `{i, j}` with `i < j` are ordered
//! colexicographically: all edges into vertex 1 first, then vertex 2, and so
//! on. For `n = 4` this is `01, 02, 12, 03, 13, 23`, and the first
//! `C(k+1, 2)` slots are exactly the edges among the first `k + 1` vertices.
//! Every vector indexed by edges in this crate uses this order.

/// Number of edges of `K_n`.
pub fn edge_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Index of edge `{i, j}` (in either order) in the fixed edge order.
pub fn edge_index(i: usize, j: usize) -> usize {
    assert_ne!(i, j, "an edge joins two distinct vertices");
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    hi * (hi - 1) / 2 + lo
}

/// All edges of `K_n` in the fixed order.
pub fn edge_list(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(edge_count(n));
    for j in 1..n {
        for i in 0..j {
            out.push((i, j));
        }
    }
    out
}

/// The edge permutation of `K_n` induced by a vertex relabeling.
///
/// `perm[v]` is the new label of vertex `v`; the returned vector maps old
/// edge index to new edge index.
pub fn induced_edge_permutation(perm: &[usize]) -> Vec<usize> {
    let n = perm.len();
    edge_list(n)
        .iter()
        .map(|&(i, j)| edge_index(perm[i], perm[j]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colex_order_for_k4() {
        assert_eq!(
            edge_list(4),
            vec![(0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)]
        );
        for (idx, (i, j)) in edge_list(4).into_iter().enumerate() {
            assert_eq!(edge_index(i, j), idx);
            assert_eq!(edge_index(j, i), idx);
        }
    }

    #[test]
    fn prefix_slots_cover_leading_vertices() {
        // The first C(k+1, 2) edges only touch vertices 0..=k.
        let edges = edge_list(6);
        for k in 1..6 {
            let c = edge_count(k + 1);
            assert!(edges[..c].iter().all(|&(i, j)| i <= k && j <= k));
        }
    }

    #[test]
    fn swapping_two_vertices_fixes_their_edge() {
        // Swap vertices 0 and 1 of K4: edge {0,1} fixed, {0,2}<->{1,2},
        // {0,3}<->{1,3}, {2,3} fixed.
        let p = induced_edge_permutation(&[1, 0, 2, 3]);
        assert_eq!(p, vec![0, 2, 1, 4, 3, 5]);
    }
}
