//! Fill-reducing symmetric orderings.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::SparseSymMatrix;

/// Ordering applied before sparse factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillOrdering {
    Natural,
    MinimumDegree,
    ReverseCuthillMckee,
    /// Minimum degree unless the matrix is denser than 10 %, where the
    /// elimination graph grows too fast; reverse Cuthill–McKee then.
    Auto,
}

const AUTO_DENSITY_LIMIT: f64 = 0.10;

impl FillOrdering {
    pub(crate) fn compute(self, m: &SparseSymMatrix) -> Vec<usize> {
        match self {
            FillOrdering::Natural => (0..m.n()).collect(),
            FillOrdering::MinimumDegree => minimum_degree(m),
            FillOrdering::ReverseCuthillMckee => reverse_cuthill_mckee(m),
            FillOrdering::Auto => {
                if 1.0 - m.sparsity() > AUTO_DENSITY_LIMIT {
                    reverse_cuthill_mckee(m)
                } else {
                    minimum_degree(m)
                }
            }
        }
    }
}

fn adjacency(m: &SparseSymMatrix) -> Vec<Vec<usize>> {
    let n = m.n();
    let mut adj = vec![Vec::new(); n];
    let (cp, ri) = (m.colptr(), m.rowind());
    for j in 0..n {
        for &i in &ri[cp[j] + 1..cp[j + 1]] {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
    }
    adj
}

fn merge_sorted(a: &[usize], b: &[usize], skip: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (_, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if next != skip {
            out.push(next);
        }
    }
    out
}

/// Exact minimum degree on the explicit elimination graph. Ties go to the
/// lowest index. Returns `perm` with `perm[k]` the k-th eliminated node.
pub fn minimum_degree(m: &SparseSymMatrix) -> Vec<usize> {
    let n = m.n();
    let mut adj = adjacency(m);
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut perm = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        perm.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            // u loses v and gains the rest of v's neighborhood
            let merged = merge_sorted(&adj[u], &nbrs, u);
            adj[u] = merged.into_iter().filter(|&w| w != v).collect();
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    perm
}

/// Reverse Cuthill–McKee, one BFS per connected component started from a
/// pseudo-peripheral node of minimum degree.
pub fn reverse_cuthill_mckee(m: &SparseSymMatrix) -> Vec<usize> {
    let n = m.n();
    let adj = adjacency(m);
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));
    let bfs_levels = |start: usize, mark: &mut Vec<bool>| -> (Vec<usize>, usize) {
        let mut seen = mark.clone();
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        let mut last_level = vec![start];
        let mut depth = 0;
        while !q.is_empty() {
            let level: Vec<usize> = q.drain(..).collect();
            let mut next = Vec::new();
            for &v in &level {
                for &u in &adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        next.push(u);
                    }
                }
            }
            last_level = level;
            if !next.is_empty() {
                depth += 1;
            }
            q.extend(next);
        }
        (last_level, depth)
    };
    for &s in &by_degree {
        if visited[s] {
            continue;
        }
        // pseudo-peripheral start
        let mut start = s;
        let (mut far, mut depth) = bfs_levels(start, &mut visited);
        for _ in 0..8 {
            let cand = *far.iter().min_by_key(|&&v| (adj[v].len(), v)).unwrap();
            let (f2, d2) = bfs_levels(cand, &mut visited);
            if d2 <= depth {
                break;
            }
            start = cand;
            far = f2;
            depth = d2;
        }
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            nb.sort_by_key(|&u| (adj[u].len(), u));
            for u in nb {
                visited[u] = true;
                q.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_permutation(p: &[usize], n: usize) -> bool {
        let mut seen = vec![false; n];
        p.len() == n && p.iter().all(|&v| v < n && !std::mem::replace(&mut seen[v], true))
    }

    fn arrow(n: usize) -> SparseSymMatrix {
        // dense first row/column: natural order fills completely
        let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, n as f64)).collect();
        t.extend((1..n).map(|i| (i, 0, 1.0)));
        SparseSymMatrix::from_lower_triplets(n, &t).unwrap()
    }

    #[test]
    fn minimum_degree_defers_hub() {
        let m = arrow(20);
        let p = minimum_degree(&m);
        assert!(is_permutation(&p, 20));
        assert!(p[..18].iter().all(|&v| v != 0));
    }

    #[test]
    fn rcm_is_permutation_on_disconnected_graph() {
        let mut t: Vec<(usize, usize, f64)> = (0..10).map(|i| (i, i, 4.0)).collect();
        t.extend([(1, 0, 1.0), (2, 1, 1.0), (6, 5, 1.0), (9, 6, 1.0)]);
        let m = SparseSymMatrix::from_lower_triplets(10, &t).unwrap();
        assert!(is_permutation(&reverse_cuthill_mckee(&m), 10));
        assert!(is_permutation(&minimum_degree(&m), 10));
        assert!(is_permutation(&FillOrdering::Auto.compute(&m), 10));
    }

    #[test]
    fn rcm_recovers_band_of_shuffled_path() {
        // a path graph relabeled at random has bandwidth 1 after RCM
        let n = 40;
        let relabel: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 2.0)).collect();
        for k in 0..n - 1 {
            let (a, b) = (relabel[k], relabel[k + 1]);
            t.push((a.max(b), a.min(b), -1.0));
        }
        let m = SparseSymMatrix::from_lower_triplets(n, &t).unwrap();
        let p = reverse_cuthill_mckee(&m);
        let mut pos = vec![0; n];
        for (k, &v) in p.iter().enumerate() {
            pos[v] = k;
        }
        for k in 0..n - 1 {
            let (a, b) = (relabel[k], relabel[k + 1]);
            assert_eq!(pos[a].abs_diff(pos[b]), 1);
        }
    }
}
