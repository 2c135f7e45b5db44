//! Eigenvalue counting through Sylvester's law of inertia.
//!
//! `H - σ·I` is factored as `L·D·Lᵀ` (no pivoting) inside the envelope of
//! a reordered lower triangle; the number of negative entries of `D` equals
//! the number of eigenvalues below `σ`. The ordering and envelope are
//! computed once per operator and shared by every shift.

use std::collections::VecDeque;

use crate::error::{IdsError, Result};
use crate::sparse::SparseSymmetricOperator;

use super::counting_shift;

/// Relative shift added to the energy after a pivot breakdown.
pub const RETRY_SHIFT: f64 = 1e-10;
pub const MAX_RETRIES: usize = 3;
/// Pivots with `|d| ≤ PIVOT_TOL · scale` count as breakdown.
pub const PIVOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    ReverseCuthillMcKee,
    /// Whichever of the two has the cheaper envelope.
    #[default]
    Auto,
}

/// Envelope LDLᵀ factorization layout for one symmetric ordering.
#[derive(Debug, Clone)]
struct Envelope {
    /// Envelope start of each permuted row.
    first: Vec<usize>,
    /// Permuted lower-triangular rows: `(column, value)`, columns ascending,
    /// diagonal last.
    rows: Vec<Vec<(usize, f64)>>,
    bandwidth: usize,
}

/// Envelope LDLᵀ counter for one operator.
///
/// Holds the chosen ordering and its reversal. Both have the same
/// bandwidth; a shift at which one of them meets a near-zero pivot is
/// retried with the other before the shift itself is perturbed.
#[derive(Debug, Clone)]
pub struct InertiaCounter {
    dim: usize,
    scale: f64,
    layouts: [Envelope; 2],
}

impl InertiaCounter {
    pub fn new(op: &SparseSymmetricOperator, ordering: Ordering) -> Self {
        let perm = match ordering {
            Ordering::Natural => (0..op.dim()).collect(),
            Ordering::ReverseCuthillMcKee => reverse_cuthill_mckee(op),
            Ordering::Auto => {
                let natural: Vec<usize> = (0..op.dim()).collect();
                let rcm = reverse_cuthill_mckee(op);
                if envelope_cost(op, &rcm) < envelope_cost(op, &natural) {
                    rcm
                } else {
                    natural
                }
            }
        };
        Self::with_permutation(op, &perm)
    }

    /// `perm[new] = old`.
    pub fn with_permutation(op: &SparseSymmetricOperator, perm: &[usize]) -> Self {
        let reversed: Vec<usize> = perm.iter().rev().copied().collect();
        InertiaCounter {
            dim: op.dim(),
            scale: op.spectral_scale(),
            layouts: [Envelope::new(op, perm), Envelope::new(op, &reversed)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.layouts[0].bandwidth
    }

    /// Entries of the factor's envelope.
    pub fn envelope_size(&self) -> usize {
        self.layouts[0].first.iter().enumerate().map(|(i, &f)| i - f).sum()
    }

    /// Number of eigenvalues `≤ energy`.
    pub fn count(&self, energy: f64) -> Result<usize> {
        let base = energy + counting_shift(self.scale);
        let delta = RETRY_SHIFT * self.scale;
        for attempt in 0..=MAX_RETRIES {
            let shift = base + attempt as f64 * delta;
            for layout in &self.layouts {
                if let Some(count) = layout.count_below(shift, PIVOT_TOL * self.scale) {
                    return Ok(count);
                }
            }
        }
        Err(IdsError::NumericalBreakdown {
            energy,
            retries: MAX_RETRIES,
        })
    }

    /// Negative pivots of `H - shift·I`, or `None` on a near-zero pivot.
    pub fn count_below(&self, shift: f64) -> Option<usize> {
        self.layouts[0].count_below(shift, PIVOT_TOL * self.scale)
    }
}

impl Envelope {
    fn new(op: &SparseSymmetricOperator, perm: &[usize]) -> Self {
        let dim = op.dim();
        assert_eq!(perm.len(), dim, "permutation length");
        let mut iperm = vec![usize::MAX; dim];
        for (new, &old) in perm.iter().enumerate() {
            assert!(iperm[old] == usize::MAX, "not a permutation");
            iperm[old] = new;
        }
        let mut rows = Vec::with_capacity(dim);
        let mut first = Vec::with_capacity(dim);
        let mut bandwidth = 0;
        for (i, &old) in perm.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = op
                .row(old)
                .map(|(j, v)| (iperm[j], v))
                .filter(|&(j, _)| j <= i)
                .collect();
            row.sort_by_key(|&(j, _)| j);
            let start = row[0].0;
            bandwidth = bandwidth.max(i - start);
            first.push(start);
            rows.push(row);
        }
        Envelope { first, rows, bandwidth }
    }

    fn count_below(&self, shift: f64, tol: f64) -> Option<usize> {
        let w = self.bandwidth;
        let mut pivots = vec![0.0; self.rows.len()];
        // ring of the last `w` factor rows; row k lives in slot k % w with
        // column c at offset c + w - k
        let mut ring = vec![0.0; w * w];
        let mut work = vec![0.0; w];
        let mut negatives = 0;
        for i in 0..self.rows.len() {
            let fi = self.first[i];
            work[fi + w - i..].fill(0.0);
            let mut diag = 0.0;
            for &(j, v) in &self.rows[i] {
                if j == i {
                    diag = v;
                } else {
                    work[j + w - i] = v;
                }
            }
            for k in fi..i {
                let lo = fi.max(self.first[k]);
                let slot = &ring[(k % w) * w..(k % w + 1) * w];
                let lk = &slot[lo + w - k..w];
                let (head, tail) = work.split_at_mut(k + w - i);
                let s = tail[0] - dot(&head[lo + w - i..], lk);
                tail[0] = s;
            }
            let mut d = diag - shift;
            let slot_i = (i % w.max(1)) * w;
            for c in fi..i {
                let u = work[c + w - i];
                let l = u / pivots[c];
                d -= u * l;
                ring[slot_i + c + w - i] = l;
            }
            if d.abs() <= tol || !d.is_finite() {
                return None;
            }
            if d < 0.0 {
                negatives += 1;
            }
            pivots[i] = d;
        }
        Some(negatives)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 8];
    let chunks_a = a.chunks_exact(8);
    let chunks_b = b.chunks_exact(8);
    let rem: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for t in 0..8 {
            acc[t] += ca[t] * cb[t];
        }
    }
    acc.iter().sum::<f64>() + rem
}

/// Sum over rows of `(row envelope width)²`, the flop count of the factorization.
fn envelope_cost(op: &SparseSymmetricOperator, perm: &[usize]) -> u128 {
    let mut iperm = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }
    perm.iter()
        .enumerate()
        .map(|(i, &old)| {
            let start = op.row(old).map(|(j, _)| iperm[j]).min().unwrap_or(i).min(i);
            let w = (i - start) as u128;
            w * w
        })
        .sum()
}

/// Reverse Cuthill–McKee ordering, one BFS per connected component started
/// from a pseudo-peripheral vertex. Returns `perm[new] = old`.
pub fn reverse_cuthill_mckee(op: &SparseSymmetricOperator) -> Vec<usize> {
    let n = op.dim();
    let degree: Vec<usize> = (0..n).map(|i| op.row(i).count() - 1).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(op, seed, &degree);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = op.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            nbrs.sort_by_key(|&j| (degree[j], j));
            for j in nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(op: &SparseSymmetricOperator, root: usize) -> Vec<Vec<usize>> {
    let mut seen = std::collections::HashSet::from([root]);
    let mut levels = vec![vec![root]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().expect("non-empty") {
            for (j, _) in op.row(v) {
                if seen.insert(j) {
                    next.push(j);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        next.sort_unstable();
        levels.push(next);
    }
}

fn pseudo_peripheral(op: &SparseSymmetricOperator, seed: usize, degree: &[usize]) -> usize {
    let mut root = seed;
    let mut levels = bfs_levels(op, root);
    loop {
        let candidate = *levels
            .last()
            .expect("non-empty")
            .iter()
            .min_by_key(|&&v| (degree[v], v))
            .expect("non-empty level");
        let trial = bfs_levels(op, candidate);
        if trial.len() <= levels.len() {
            return root;
        }
        root = candidate;
        levels = trial;
    }
}
