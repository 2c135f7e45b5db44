//! Eigenvalue counting functions and spectral measures.

mod dense;
mod inertia;
mod sturm;

pub use dense::{dense_eigenvalues, dense_eigenvalues_capped, tridiagonal_eigenvalues, DEFAULT_DENSE_CAP};
pub use inertia::{reverse_cuthill_mckee, InertiaCounter, Ordering, MAX_RETRIES, PIVOT_TOL, RETRY_SHIFT};
pub use sturm::{sturm_count, sturm_count_raw};

use serde::{Deserialize, Serialize};

use crate::error::{IdsError, Result};
use crate::exec::Execution;
use crate::sparse::SparseSymmetricOperator;

/// Relative offset that turns a strict "below σ" pivot count into the
/// closed-interval count `#{λ ≤ E}`.
pub const COUNT_OFFSET: f64 = 1e-12;

pub(crate) fn counting_shift(scale: f64) -> f64 {
    COUNT_OFFSET * scale
}

/// Right-continuous nondecreasing step function.
///
/// `raw_counts[k]` is the unnormalized mass at or below `breakpoints[k]`;
/// the represented function is `raw / normalization`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingFunction {
    breakpoints: Vec<f64>,
    raw_counts: Vec<f64>,
    normalization: f64,
}

impl CountingFunction {
    /// Builds from breakpoints and cumulative raw counts. Breakpoints must be
    /// strictly increasing and counts nondecreasing and non-negative.
    pub fn new(breakpoints: Vec<f64>, raw_counts: Vec<f64>, normalization: f64) -> Result<Self> {
        if breakpoints.len() != raw_counts.len() {
            return Err(IdsError::Dimension {
                expected: breakpoints.len(),
                got: raw_counts.len(),
            });
        }
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(IdsError::invalid("normalization", "must be positive"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1] || w[0].is_nan()) {
            return Err(IdsError::Usage("breakpoints must be strictly increasing".into()));
        }
        if raw_counts.first().is_some_and(|&c| c < 0.0) || raw_counts.windows(2).any(|w| w[0] > w[1]) {
            return Err(IdsError::Usage("counts must be nondecreasing and non-negative".into()));
        }
        Ok(CountingFunction {
            breakpoints,
            raw_counts,
            normalization,
        })
    }

    pub fn empty(normalization: f64) -> Self {
        CountingFunction {
            breakpoints: Vec::new(),
            raw_counts: Vec::new(),
            normalization,
        }
    }

    /// Builds from `(energy, weight)` jumps sorted by energy with distinct
    /// energies.
    pub(crate) fn from_sorted_jumps(jumps: &[(f64, f64)], normalization: f64) -> Self {
        let mut total = 0.0;
        let mut breakpoints = Vec::with_capacity(jumps.len());
        let mut raw_counts = Vec::with_capacity(jumps.len());
        for &(e, w) in jumps {
            total += w;
            breakpoints.push(e);
            raw_counts.push(total);
        }
        CountingFunction {
            breakpoints,
            raw_counts,
            normalization,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn raw_counts(&self) -> &[f64] {
        &self.raw_counts
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Normalized counts at the breakpoints.
    pub fn counts(&self) -> Vec<f64> {
        self.raw_counts.iter().map(|c| c / self.normalization).collect()
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn raw_value(&self, energy: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= energy);
        if idx == 0 {
            0.0
        } else {
            self.raw_counts[idx - 1]
        }
    }

    pub fn value(&self, energy: f64) -> f64 {
        self.raw_value(energy) / self.normalization
    }

    pub fn total_raw_mass(&self) -> f64 {
        self.raw_counts.last().copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.total_raw_mass() / self.normalization
    }

    /// Jumps `(energy, raw weight)`.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let mut prev = 0.0;
        self.breakpoints
            .iter()
            .zip(&self.raw_counts)
            .map(|(&e, &c)| {
                let w = c - prev;
                prev = c;
                (e, w)
            })
            .collect()
    }

    /// The same function divided by a different volume.
    pub fn renormalized(&self, normalization: f64) -> Self {
        CountingFunction {
            normalization,
            ..self.clone()
        }
    }

    /// `sup_E |self(E) - other(E)|` over the given energies.
    pub fn sup_distance_on(&self, other: &CountingFunction, energies: &[f64]) -> f64 {
        energies
            .iter()
            .map(|&e| (self.value(e) - other.value(e)).abs())
            .fold(0.0, f64::max)
    }
}

/// Finite atomic measure with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<f64>,
    raw_weights: Vec<f64>,
    normalization: f64,
}

impl SpectralMeasure {
    pub fn new(atoms: Vec<f64>, raw_weights: Vec<f64>, normalization: f64) -> Result<Self> {
        if atoms.len() != raw_weights.len() {
            return Err(IdsError::Dimension {
                expected: atoms.len(),
                got: raw_weights.len(),
            });
        }
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(IdsError::invalid("normalization", "must be positive"));
        }
        if atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(IdsError::Usage("atoms must be strictly increasing".into()));
        }
        if raw_weights.iter().any(|&w| !(w > 0.0)) {
            return Err(IdsError::Usage("weights must be positive".into()));
        }
        Ok(SpectralMeasure {
            atoms,
            raw_weights,
            normalization,
        })
    }

    /// Unit atom at zero, the identity for convolution.
    pub fn dirac(at: f64) -> Self {
        SpectralMeasure {
            atoms: vec![at],
            raw_weights: vec![1.0],
            normalization: 1.0,
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn raw_weights(&self) -> &[f64] {
        &self.raw_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.raw_weights.iter().map(|w| w / self.normalization).collect()
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn total_mass(&self) -> f64 {
        self.raw_weights.iter().sum::<f64>() / self.normalization
    }

    /// Distribution function of the measure.
    pub fn distribution(&self) -> CountingFunction {
        let jumps: Vec<_> = self
            .atoms
            .iter()
            .copied()
            .zip(self.raw_weights.iter().copied())
            .collect();
        CountingFunction::from_sorted_jumps(&jumps, self.normalization)
    }
}

fn group_sorted(eigs: &[f64]) -> Result<Vec<(f64, f64)>> {
    if eigs.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(IdsError::Usage("eigenvalues must be sorted ascending".into()));
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &e in eigs {
        match out.last_mut() {
            Some(last) if last.0 == e => last.1 += 1.0,
            _ => out.push((e, 1.0)),
        }
    }
    Ok(out)
}

/// `E ↦ #{λ ≤ E} / normalization` for a sorted eigenvalue list.
pub fn counting_function_from_eigs(eigs: &[f64], normalization: f64) -> Result<CountingFunction> {
    if !(normalization.is_finite() && normalization > 0.0) {
        return Err(IdsError::invalid("normalization", "must be positive"));
    }
    let jumps = group_sorted(eigs)?;
    Ok(CountingFunction::from_sorted_jumps(&jumps, normalization))
}

/// Counting measure of a sorted eigenvalue list, divided by `normalization`.
pub fn spectral_measure_from_eigs(eigs: &[f64], normalization: f64) -> Result<SpectralMeasure> {
    let jumps = group_sorted(eigs)?;
    let (atoms, weights) = jumps.into_iter().unzip();
    SpectralMeasure::new(atoms, weights, normalization)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    Sturm,
    Inertia,
    /// Sturm on tridiagonal operators, inertia otherwise.
    #[default]
    Auto,
}

/// A prepared counter: any per-operator setup is done once, after which
/// [`Counter::count`] may be called concurrently.
#[derive(Debug, Clone)]
pub enum Counter {
    Sturm { diag: Vec<f64>, off: Vec<f64>, scale: f64 },
    Inertia(InertiaCounter),
}

impl Counter {
    pub fn new(op: &SparseSymmetricOperator, method: CountMethod) -> Result<Self> {
        let tri = op.tridiagonal_parts();
        match (method, tri) {
            (CountMethod::Sturm | CountMethod::Auto, Some((diag, off))) => Ok(Counter::Sturm {
                diag,
                off,
                scale: op.spectral_scale(),
            }),
            (CountMethod::Sturm, None) => Err(IdsError::Usage("sturm counting requires a tridiagonal operator".into())),
            _ => Ok(Counter::Inertia(InertiaCounter::new(op, Ordering::Auto))),
        }
    }

    pub fn count(&self, energy: f64) -> Result<usize> {
        match self {
            Counter::Sturm { diag, off, scale } => Ok(sturm_count_raw(diag, off, energy + counting_shift(*scale))),
            Counter::Inertia(c) => c.count(energy),
        }
    }
}

/// Number of eigenvalues `≤ energy` via envelope LDLᵀ of `op - E·I`.
pub fn inertia_count(op: &SparseSymmetricOperator, energy: f64) -> Result<usize> {
    InertiaCounter::new(op, Ordering::Auto).count(energy)
}

/// Counts at each grid energy (sorted ascending) as a sampled counting
/// function.
pub fn counting_function_by_queries(
    op: &SparseSymmetricOperator,
    energy_grid: &[f64],
    method: CountMethod,
    normalization: f64,
    exec: Execution,
) -> Result<CountingFunction> {
    if energy_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(IdsError::Usage("energy grid must be strictly increasing".into()));
    }
    let counter = Counter::new(op, method)?;
    let counts = exec
        .map(energy_grid, |&e| counter.count(e))
        .into_iter()
        .collect::<Result<Vec<usize>>>()?;
    assert!(
        counts.windows(2).all(|w| w[0] <= w[1]),
        "counting queries returned a non-monotone sequence"
    );
    CountingFunction::new(
        energy_grid.to_vec(),
        counts.into_iter().map(|c| c as f64).collect(),
        normalization,
    )
}
