//! Maximum bipartite matching via augmenting paths.
//!
//! Left vertices (pairs, or users in the OMA baseline) are matched to right
//! vertices (channels). Adjacency is bit-packed: `adjacency[l]` holds one bit
//! per right vertex. The augmenting-path scan processes left vertices in
//! index order and tries right vertices in ascending order, so the result is
//! deterministic in the adjacency alone.

/// Computes a maximum matching. Returns, per left vertex, the matched right
/// vertex or `None` when the vertex is left unmatched.
pub fn max_bipartite(adjacency: &[Vec<u64>], n_right: usize) -> Vec<Option<usize>> {
    let n_left = adjacency.len();
    let words = n_right.div_ceil(64).max(1);
    let mut match_left = vec![usize::MAX; n_left];
    let mut match_right = vec![usize::MAX; n_right];
    let mut visited = vec![0u64; words];
    for u in 0..n_left {
        visited.fill(0);
        augment(u, adjacency, &mut match_left, &mut match_right, &mut visited);
    }
    match_left
        .into_iter()
        .map(|c| if c == usize::MAX { None } else { Some(c) })
        .collect()
}

fn augment(
    u: usize,
    adjacency: &[Vec<u64>],
    match_left: &mut [usize],
    match_right: &mut [usize],
    visited: &mut [u64],
) -> bool {
    for (wi, &word) in adjacency[u].iter().enumerate() {
        let mut fresh = word & !visited[wi];
        while fresh != 0 {
            let bit = fresh.trailing_zeros() as usize;
            fresh &= fresh - 1;
            visited[wi] |= 1 << bit;
            let c = wi * 64 + bit;
            let holder = match_right[c];
            if holder == usize::MAX
                || augment(holder, adjacency, match_left, match_right, visited)
            {
                match_right[c] = u;
                match_left[u] = c;
                return true;
            }
        }
    }
    false
}

/// Builds a packed adjacency row from explicit right-vertex indices.
pub fn pack_adjacency(neighbors: &[usize], n_right: usize) -> Vec<u64> {
    let words = n_right.div_ceil(64).max(1);
    let mut row = vec![0u64; words];
    for &c in neighbors {
        row[c / 64] |= 1 << (c % 64);
    }
    row
}
