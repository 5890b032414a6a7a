//! Maximum conflict-free antenna layouts (maximum independent sets of the
//! conflict graph).

use super::{ConflictSet, MaGrid, GEOM_EPS};

/// Size of a maximum independent set of the conflict graph.
pub fn max_deployable(grid: &MaGrid, conflicts: &ConflictSet) -> usize {
    max_packing(grid, conflicts).len()
}

/// A maximum independent set, sorted by index.
///
/// On the square lattice with stride `k = ⌈D/d⌉`, every pair inside a
/// `k×k` tile conflicts as soon as the tile diagonal `(k-1)·√2·d` is below
/// `D`; then each tile holds at most one antenna and the stride-`k`
/// sublattice, which fills every tile, is optimal. Otherwise we fall back to
/// exact branch and bound.
pub fn max_packing(grid: &MaGrid, conflicts: &ConflictSet) -> Vec<usize> {
    if conflicts.is_empty() {
        return (0..grid.len()).collect();
    }
    let d = grid.step();
    let dmin = conflicts.min_distance();
    let k = ((dmin / d) - GEOM_EPS).ceil().max(1.0) as usize;
    let tile_diag = (k as f64 - 1.0) * std::f64::consts::SQRT_2 * d;
    if tile_diag < dmin * (1.0 - GEOM_EPS) {
        let n = grid.per_side();
        let mut out = Vec::new();
        for row in (0..n).step_by(k) {
            for col in (0..n).step_by(k) {
                out.push(row * n + col);
            }
        }
        return out;
    }
    let n = grid.per_side();
    let mut stride = Vec::new();
    for row in (0..n).step_by(k) {
        for col in (0..n).step_by(k) {
            stride.push(row * n + col);
        }
    }
    let greedy = greedy_packing(grid.len(), conflicts);
    let incumbent = if greedy.len() > stride.len() { greedy } else { stride };
    let (best, exact) = branch_and_bound(grid.len(), conflicts, incumbent, SEARCH_BUDGET);
    if !exact {
        log::warn!(
            "packing search stopped after {SEARCH_BUDGET} nodes; using a layout of {} antennas that may not be maximum",
            best.len()
        );
    }
    best
}

/// Node budget for the exact search on lattices the stride argument does
/// not cover.
pub const SEARCH_BUDGET: u64 = 200_000;

/// Lowest-index-first greedy independent set.
fn greedy_packing(n: usize, conflicts: &ConflictSet) -> Vec<usize> {
    let adj = conflicts.adjacency(n);
    let mut blocked = vec![false; n];
    let mut out = Vec::new();
    for v in 0..n {
        if !blocked[v] {
            out.push(v);
            for &u in &adj[v] {
                blocked[u] = true;
            }
        }
    }
    out
}

/// Exact maximum independent set by branch and bound, bounding with a
/// greedy clique cover of the conflict graph.
pub fn max_packing_exhaustive(n: usize, conflicts: &ConflictSet) -> Vec<usize> {
    branch_and_bound(n, conflicts, Vec::new(), u64::MAX).0
}

/// Returns the best set found and whether the search finished.
fn branch_and_bound(n: usize, conflicts: &ConflictSet, incumbent: Vec<usize>, budget: u64) -> (Vec<usize>, bool) {
    let words = n.div_ceil(64).max(1);
    // compatible[v]: vertices that may coexist with v
    let mut compatible = vec![vec![!0u64; words]; n];
    for (v, row) in compatible.iter_mut().enumerate() {
        clear(row, v);
        trim(row, n);
    }
    for &(a, b) in conflicts.pairs() {
        clear(&mut compatible[a], b);
        clear(&mut compatible[b], a);
    }
    let mut all = vec![!0u64; words];
    trim(&mut all, n);

    let mut search = Search {
        compatible,
        best: incumbent,
        nodes: 0,
        budget,
    };
    let mut current = Vec::new();
    search.expand(&mut current, all);
    let exact = search.nodes < search.budget;
    let mut best = search.best;
    best.sort_unstable();
    (best, exact)
}

struct Search {
    compatible: Vec<Vec<u64>>,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl Search {
    fn expand(&mut self, current: &mut Vec<usize>, mut cand: Vec<u64>) {
        self.nodes += 1;
        if self.nodes >= self.budget {
            return;
        }
        let (order, bounds) = self.cover_order(&cand);
        for i in (0..order.len()).rev() {
            if self.nodes >= self.budget {
                return;
            }
            if current.len() + bounds[i] <= self.best.len() {
                return;
            }
            let v = order[i];
            current.push(v);
            let next: Vec<u64> = cand
                .iter()
                .zip(&self.compatible[v])
                .map(|(a, b)| a & b)
                .collect();
            if next.iter().all(|&w| w == 0) {
                if current.len() > self.best.len() {
                    self.best = current.clone();
                }
            } else {
                self.expand(current, next);
            }
            current.pop();
            clear(&mut cand, v);
        }
    }

    /// Partitions the candidates into conflict cliques (each can contribute at
    /// most one vertex). Returns vertices ordered by clique index with the
    /// number of cliques up to and including each one.
    fn cover_order(&self, cand: &[u64]) -> (Vec<usize>, Vec<usize>) {
        let mut remaining = cand.to_vec();
        let mut order = Vec::new();
        let mut bounds = Vec::new();
        let mut k = 0;
        while remaining.iter().any(|&w| w != 0) {
            k += 1;
            // vertices still allowed in this clique: conflict with every member so far
            let mut q = remaining.clone();
            while let Some(v) = first_set(&q) {
                clear(&mut remaining, v);
                clear(&mut q, v);
                for (qw, cw) in q.iter_mut().zip(&self.compatible[v]) {
                    *qw &= !cw;
                }
                order.push(v);
                bounds.push(k);
            }
        }
        (order, bounds)
    }
}

fn clear(bits: &mut [u64], i: usize) {
    bits[i / 64] &= !(1u64 << (i % 64));
}

fn trim(bits: &mut [u64], n: usize) {
    let words = bits.len();
    for i in n..words * 64 {
        bits[i / 64] &= !(1u64 << (i % 64));
    }
}

fn first_set(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
}
