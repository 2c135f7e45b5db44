//! Integrated-density-of-states approximants on finite boxes.
//!
//! The noninteracting `n`-particle operator is a Kronecker sum, so its
//! eigenvalues are the `n`-fold sums of single-particle eigenvalues and its
//! counting function is `N̂₁ ∗ ν̂₁ ∗ ⋯ ∗ ν̂₁`. [`noninteracting_ids`] builds
//! it that way; [`noninteracting_ids_direct`] diagonalizes the assembled
//! operator instead and exists to cross-check the first path. The
//! interacting operator adds `V_i ≥ 0` on the diagonal and is only reachable
//! by counting queries.

use std::time::{Duration, Instant};

use statrs::function::erf::erf;

use crate::error::{IdsError, Result};
use crate::exec::Execution;
use crate::lattice::{
    assemble_hamiltonian, discretize_laplacian, interaction_field, lift_potential, sample_potential, BoundaryCondition,
    BoxSpec, InteractionKernel, PotentialDescriptor, DEFAULT_DIM_CAP,
};
use crate::sparse::SparseSymmetricOperator;
use crate::spectral::{
    counting_function_by_queries, counting_function_from_eigs, dense_eigenvalues_capped, spectral_measure_from_eigs,
    CountMethod, CountingFunction, SpectralMeasure, DEFAULT_DENSE_CAP,
};

/// Largest number of pairwise sums a convolution represents exactly.
pub const EXACT_CONVOLUTION_CAP: usize = 1_000_000;
/// Coincident-sum merge tolerance, relative to the spectral scale.
pub const MERGE_TOL: f64 = 1e-9;
/// Fraction of the spectrum the default energy window must contain.
pub const WINDOW_MASS_FRACTION: f64 = 0.1;

/// Physical model shared by every box size of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d: usize,
    pub n: usize,
    pub h: f64,
    pub boundary: BoundaryCondition,
    pub potential: PotentialDescriptor,
    pub seed: u64,
    pub dim_cap: u128,
    pub dense_cap: usize,
    pub method: CountMethod,
    pub exec: Execution,
    pub convolution: ConvolutionOptions,
}

impl ModelConfig {
    pub fn new(d: usize, n: usize, h: f64) -> Self {
        ModelConfig {
            d,
            n,
            h,
            boundary: BoundaryCondition::Dirichlet,
            potential: PotentialDescriptor::default(),
            seed: 0,
            dim_cap: DEFAULT_DIM_CAP,
            dense_cap: DEFAULT_DENSE_CAP,
            method: CountMethod::Auto,
            exec: Execution::Parallel,
            convolution: ConvolutionOptions::default(),
        }
    }

    pub fn with_potential(mut self, potential: PotentialDescriptor, seed: u64) -> Self {
        self.potential = potential;
        self.seed = seed;
        self
    }

    pub fn box_spec(&self, side: f64, n: usize) -> Result<BoxSpec> {
        BoxSpec::with_cap(self.d, n, side, self.h, self.boundary, self.dim_cap)
    }

    /// One-particle Hamiltonian `-Δ + V₁` on `Λ(0,L)`.
    pub fn single_particle_operator(&self, side: f64) -> Result<SparseSymmetricOperator> {
        let spec = self.box_spec(side, 1)?;
        let potential = sample_potential(&self.potential, &spec, self.seed)?;
        assemble_hamiltonian(&discretize_laplacian(&spec)?, &[&potential.values])
    }

    /// `-Δ + V_n (+ V_i)` on `Λ(0,L)^n`.
    pub fn many_particle_operator(
        &self,
        side: f64,
        n: usize,
        kernel: Option<&InteractionKernel>,
    ) -> Result<SparseSymmetricOperator> {
        let spec = self.box_spec(side, n)?;
        let single = spec.with_particles(1)?;
        let potential = sample_potential(&self.potential, &single, self.seed)?;
        let lifted = lift_potential(&potential, &spec)?;
        let lap = discretize_laplacian(&spec)?;
        match kernel {
            Some(k) => {
                let vi = interaction_field(k, &spec)?;
                assemble_hamiltonian(&lap, &[&lifted, &vi])
            }
            None => assemble_hamiltonian(&lap, &[&lifted]),
        }
    }
}

/// Normalized single-particle counting function and measure, both built
/// from the same eigenvalue list.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleIds {
    pub spec: BoxSpec,
    pub eigenvalues: Vec<f64>,
    pub counting: CountingFunction,
    pub measure: SpectralMeasure,
}

pub fn single_particle_ids(model: &ModelConfig, side: f64) -> Result<SingleParticleIds> {
    let spec = model.box_spec(side, 1)?;
    let op = model.single_particle_operator(side)?;
    let eigenvalues = dense_eigenvalues_capped(&op, model.dense_cap)?;
    let volume = spec.single_particle_volume();
    Ok(SingleParticleIds {
        spec,
        counting: counting_function_from_eigs(&eigenvalues, volume)?,
        measure: spectral_measure_from_eigs(&eigenvalues, volume)?,
        eigenvalues,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionOptions {
    /// Coincident sums closer than `merge_tol · scale` become one jump.
    pub merge_tol: f64,
    pub exact_cap: usize,
    /// Bin width used when the exact representation would exceed
    /// `exact_cap`; `None` makes that case an error.
    pub bin_width: Option<f64>,
}

impl Default for ConvolutionOptions {
    fn default() -> Self {
        ConvolutionOptions {
            merge_tol: MERGE_TOL,
            exact_cap: EXACT_CONVOLUTION_CAP,
            bin_width: None,
        }
    }
}

/// Result of [`convolve_counting`]. `bin_width` is set when the result was
/// binned, in which case values are exact only to within the mass of one
/// bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolution {
    pub function: CountingFunction,
    pub bin_width: Option<f64>,
}

/// `(F ∗ μ)(E) = Σ_j w_j F(E - e_j)`, represented as a step function whose
/// jumps sit at the sums of `F` breakpoints and `μ` atoms.
pub fn convolve_counting(f: &CountingFunction, mu: &SpectralMeasure, opts: &ConvolutionOptions) -> Result<Convolution> {
    let normalization = f.normalization() * mu.normalization();
    let jumps = f.jumps();
    let pairs = jumps.len().saturating_mul(mu.atoms().len());
    if pairs == 0 {
        return Ok(Convolution {
            function: CountingFunction::empty(normalization),
            bin_width: None,
        });
    }
    let mut sums = Vec::with_capacity(pairs.min(opts.exact_cap));
    let bin_width = if pairs > opts.exact_cap {
        let width = opts.bin_width.ok_or(IdsError::SizeCap {
            what: "convolution sums",
            size: pairs as u128,
            cap: opts.exact_cap as u128,
        })?;
        if !(width.is_finite() && width > 0.0) {
            return Err(IdsError::invalid("bin_width", "must be positive"));
        }
        Some(width)
    } else {
        None
    };

    let lo = jumps[0].0 + mu.atoms()[0];
    let hi = jumps[jumps.len() - 1].0 + mu.atoms()[mu.atoms().len() - 1];
    let scale = lo.abs().max(hi.abs()).max(1.0);

    match bin_width {
        None => {
            for &(e, w) in &jumps {
                for (&a, &v) in mu.atoms().iter().zip(mu.raw_weights()) {
                    sums.push((e + a, w * v));
                }
            }
            sums.sort_by(|x, y| x.0.total_cmp(&y.0));
            let tol = opts.merge_tol * scale;
            let mut merged: Vec<(f64, f64)> = Vec::with_capacity(sums.len());
            let mut anchor = f64::NEG_INFINITY;
            for (e, w) in sums {
                match merged.last_mut() {
                    Some(last) if e - anchor <= tol => last.1 += w,
                    _ => {
                        anchor = e;
                        merged.push((e, w));
                    }
                }
            }
            Ok(Convolution {
                function: CountingFunction::from_sorted_jumps(&merged, normalization),
                bin_width: None,
            })
        }
        Some(width) => {
            let bins = ((hi - lo) / width).floor() as usize + 1;
            let mut mass = vec![0.0; bins];
            for &(e, w) in &jumps {
                for (&a, &v) in mu.atoms().iter().zip(mu.raw_weights()) {
                    let k = (((e + a - lo) / width).floor() as usize).min(bins - 1);
                    mass[k] += w * v;
                }
            }
            // each bin's mass jumps at the bin's right edge
            let merged: Vec<(f64, f64)> = mass
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(k, &w)| (lo + (k + 1) as f64 * width, w))
                .collect();
            Ok(Convolution {
                function: CountingFunction::from_sorted_jumps(&merged, normalization),
                bin_width: Some(width),
            })
        }
    }
}

/// `N₁ᴸ ∗ ν₁ᴸ ∗ ⋯ ∗ ν₁ᴸ` with `n - 1` convolutions, normalized by `L^(n·d)`.
pub fn noninteracting_ids(model: &ModelConfig, side: f64, n: usize) -> Result<Convolution> {
    let single = single_particle_ids(model, side)?;
    noninteracting_from_single(&single, n, &model.convolution)
}

pub fn noninteracting_from_single(
    single: &SingleParticleIds,
    n: usize,
    opts: &ConvolutionOptions,
) -> Result<Convolution> {
    if n == 0 {
        return Err(IdsError::invalid("n", "particle count must be at least 1"));
    }
    let mut acc = Convolution {
        function: single.counting.clone(),
        bin_width: None,
    };
    for _ in 1..n {
        let next = convolve_counting(&acc.function, &single.measure, opts)?;
        acc = Convolution {
            function: next.function,
            bin_width: acc.bin_width.or(next.bin_width),
        };
    }
    Ok(acc)
}

/// Breakpoint-level comparison of two counting functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    /// Clusters of breakpoints (union of both functions) closer than the
    /// tolerance.
    pub clusters: usize,
    /// Clusters at whose right end the raw counts differ.
    pub mismatches: usize,
    pub max_raw_diff: f64,
}

impl Agreement {
    pub fn exact(&self) -> bool {
        self.mismatches == 0
    }
}

/// Compares raw counts at the right end of every breakpoint cluster. Two
/// step functions whose jumps fall in the same clusters and agree there
/// agree everywhere outside the clusters.
pub fn lemma_agreement(a: &CountingFunction, b: &CountingFunction, merge_tol: f64) -> Agreement {
    let mut points: Vec<f64> = a.breakpoints().iter().chain(b.breakpoints()).copied().collect();
    points.sort_by(f64::total_cmp);
    let scale = points.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let tol = merge_tol * scale;
    let mut out = Agreement {
        clusters: 0,
        mismatches: 0,
        max_raw_diff: 0.0,
    };
    let mut i = 0;
    while i < points.len() {
        let mut j = i;
        while j + 1 < points.len() && points[j + 1] - points[j] <= tol {
            j += 1;
        }
        let e = points[j];
        let diff = (a.raw_value(e) - b.raw_value(e)).abs();
        out.clusters += 1;
        if diff != 0.0 {
            out.mismatches += 1;
            out.max_raw_diff = out.max_raw_diff.max(diff);
        }
        i = j + 1;
    }
    out
}

/// Counting function of the assembled noninteracting operator by dense
/// diagonalization.
pub fn noninteracting_ids_direct(model: &ModelConfig, side: f64, n: usize) -> Result<CountingFunction> {
    let spec = model.box_spec(side, n)?;
    let op = model.many_particle_operator(side, n, None)?;
    let eigs = dense_eigenvalues_capped(&op, model.dense_cap)?;
    counting_function_from_eigs(&eigs, spec.volume())
}

/// Noninteracting counting function sampled on `grid` by counting queries
/// on the assembled operator.
pub fn noninteracting_ids_direct_on_grid(
    model: &ModelConfig,
    side: f64,
    n: usize,
    grid: &[f64],
) -> Result<CountingFunction> {
    let spec = model.box_spec(side, n)?;
    let op = model.many_particle_operator(side, n, None)?;
    counting_function_by_queries(&op, grid, model.method, spec.volume(), model.exec)
}

/// Interacting counting function `N_L` sampled on `grid`.
pub fn interacting_ids(
    model: &ModelConfig,
    side: f64,
    n: usize,
    kernel: &InteractionKernel,
    grid: &[f64],
) -> Result<CountingFunction> {
    let spec = model.box_spec(side, n)?;
    let op = model.many_particle_operator(side, n, Some(kernel))?;
    counting_function_by_queries(&op, grid, model.method, spec.volume(), model.exec)
}

/// Interacting counting function by dense diagonalization (small boxes).
pub fn interacting_ids_dense(
    model: &ModelConfig,
    side: f64,
    n: usize,
    kernel: &InteractionKernel,
) -> Result<CountingFunction> {
    let spec = model.box_spec(side, n)?;
    let op = model.many_particle_operator(side, n, Some(kernel))?;
    let eigs = dense_eigenvalues_capped(&op, model.dense_cap)?;
    counting_function_from_eigs(&eigs, spec.volume())
}

/// Relative volume of `{V_i > ε}` inside the product box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportFraction {
    pub epsilon: f64,
    /// Grid points with `V_i > ε`.
    pub points: usize,
    /// `h^(n·d) · points / L^(n·d)`.
    pub fraction: f64,
    /// `fraction · L^d`, the finite-volume stand-in for `C(n, ε)`.
    pub scaled_constant: f64,
}

pub fn support_fraction(field: &[f64], epsilon: f64, spec: &BoxSpec) -> Result<SupportFraction> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(IdsError::invalid("epsilon", "must be positive"));
    }
    if field.len() != spec.dim() {
        return Err(IdsError::Dimension {
            expected: spec.dim(),
            got: field.len(),
        });
    }
    let points = field.iter().filter(|&&v| v > epsilon).count();
    let nd = (spec.n() * spec.d()) as i32;
    let fraction = spec.h().powi(nd) * points as f64 / spec.volume();
    Ok(SupportFraction {
        epsilon,
        points,
        fraction,
        scaled_constant: fraction * spec.single_particle_volume(),
    })
}

/// `[λ_min - 1, E₁₀]`, where `E₁₀` is the first breakpoint at which the
/// function holds at least 10% of its total mass.
pub fn default_energy_window(f: &CountingFunction) -> Result<(f64, f64)> {
    let first = *f
        .breakpoints()
        .first()
        .ok_or_else(|| IdsError::Usage("cannot place a window on an empty spectrum".into()))?;
    let target = WINDOW_MASS_FRACTION * f.total_raw_mass();
    let idx = f.raw_counts().partition_point(|&c| c < target);
    let hi = f.breakpoints()[idx.min(f.len() - 1)];
    Ok((first - 1.0, hi))
}

/// `points` equally spaced energies covering `[lo, hi]`.
pub fn energy_grid(window: (f64, f64), points: usize) -> Result<Vec<f64>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(IdsError::invalid("window", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    match points {
        0 => Err(IdsError::invalid("grid_points", "must be positive")),
        1 => Ok(vec![lo]),
        _ => Ok((0..points)
            .map(|k| lo + (hi - lo) * (k as f64) / ((points - 1) as f64))
            .collect()),
    }
}

/// One box size of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub side: f64,
    pub m: usize,
    pub dim: usize,
    /// `sup_E |N_L^int(E) - N_L^nonint(E)|` over the grid.
    pub sup_diff: f64,
    /// Largest `raw_int - raw_nonint` over the grid; non-positive for
    /// non-negative kernels.
    pub max_raw_excess: f64,
    pub support: Vec<SupportFraction>,
    pub interacting: CountingFunction,
    pub noninteracting: CountingFunction,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub window: (f64, f64),
    pub grid: Vec<f64>,
    pub records: Vec<ConvergenceRecord>,
    /// Least-squares slope of `ln sup_diff` against `ln L` over records
    /// with positive `sup_diff`.
    pub exponent: Option<f64>,
    pub complete: bool,
    pub failure: Option<IdsError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOptions {
    pub sides: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Explicit window; the default rule is applied at the smallest `L`
    /// when `None`.
    pub window: Option<(f64, f64)>,
    pub grid_points: usize,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Resolves the study's energy grid from its options.
pub fn study_grid(model: &ModelConfig, opts: &StudyOptions) -> Result<((f64, f64), Vec<f64>)> {
    let window = match opts.window {
        Some(w) => w,
        None => {
            let smallest = *opts
                .sides
                .first()
                .ok_or_else(|| IdsError::invalid("L", "need at least one box size"))?;
            let nonint = noninteracting_ids(model, smallest, model.n)?;
            default_energy_window(&nonint.function)?
        }
    };
    Ok((window, energy_grid(window, opts.grid_points)?))
}

/// Compares interacting and noninteracting counting functions across a
/// sweep of box sizes at fixed mesh.
pub fn convergence_study(
    model: &ModelConfig,
    kernel: &InteractionKernel,
    opts: &StudyOptions,
) -> Result<ConvergenceReport> {
    if opts.sides.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(IdsError::invalid("L", "box sizes must be strictly increasing"));
    }
    for &eps in &opts.epsilons {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(IdsError::invalid("epsilon", "must be positive"));
        }
    }
    kernel.validate()?;
    let (window, grid) = study_grid(model, opts)?;

    let outcomes = model.exec.map(&opts.sides, |&side| {
        study_member(model, kernel, side, &opts.epsilons, &grid)
    });

    let mut records = Vec::new();
    let mut failure = None;
    for outcome in outcomes {
        match outcome {
            Ok(record) => records.push(record),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let positive: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.sup_diff > 0.0).collect();
    let xs: Vec<f64> = positive.iter().map(|r| r.side.ln()).collect();
    let ys: Vec<f64> = positive.iter().map(|r| r.sup_diff.ln()).collect();
    Ok(ConvergenceReport {
        window,
        grid,
        exponent: fit_slope(&xs, &ys),
        complete: failure.is_none(),
        failure,
        records,
    })
}

fn study_member(
    model: &ModelConfig,
    kernel: &InteractionKernel,
    side: f64,
    epsilons: &[f64],
    grid: &[f64],
) -> Result<ConvergenceRecord> {
    let start = Instant::now();
    let spec = model.box_spec(side, model.n)?;
    let nonint_full = noninteracting_ids(model, side, model.n)?.function;
    let raw: Vec<f64> = grid.iter().map(|&e| nonint_full.raw_value(e)).collect();
    let noninteracting = CountingFunction::new(grid.to_vec(), raw, spec.volume())?;
    let interacting = interacting_ids(model, side, model.n, kernel, grid)?;

    let field = interaction_field(kernel, &spec)?;
    let support = epsilons
        .iter()
        .map(|&eps| support_fraction(&field, eps, &spec))
        .collect::<Result<Vec<_>>>()?;

    let mut sup_diff: f64 = 0.0;
    let mut max_raw_excess = f64::NEG_INFINITY;
    for (a, b) in interacting.raw_counts().iter().zip(noninteracting.raw_counts()) {
        sup_diff = sup_diff.max((a - b).abs() / spec.volume());
        max_raw_excess = max_raw_excess.max(a - b);
    }
    Ok(ConvergenceRecord {
        side,
        m: spec.points_per_axis(),
        dim: spec.dim(),
        sup_diff,
        max_raw_excess,
        support,
        interacting,
        noninteracting,
        wall_time: start.elapsed(),
    })
}

/// Indicator of `[lo, hi]` convolved with a centred Gaussian of width `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedWindow {
    pub lo: f64,
    pub hi: f64,
    pub sigma: f64,
}

impl MollifiedWindow {
    pub fn eval(&self, x: f64) -> f64 {
        let s = self.sigma * std::f64::consts::SQRT_2;
        0.5 * (erf((x - self.lo) / s) - erf((x - self.hi) / s))
    }
}

/// `L^(-n·d) · [Σ φ(λ_int) - Σ φ(λ_nonint)]` from dense spectra of both
/// operators.
pub fn smoothed_trace_diff(
    model: &ModelConfig,
    side: f64,
    kernel: &InteractionKernel,
    phi: &MollifiedWindow,
) -> Result<f64> {
    if !(phi.sigma.is_finite() && phi.sigma > 0.0) {
        return Err(IdsError::invalid("sigma", "mollifier width must be positive"));
    }
    let spec = model.box_spec(side, model.n)?;
    let nonint = model.many_particle_operator(side, model.n, None)?;
    let int = model.many_particle_operator(side, model.n, Some(kernel))?;
    let e0 = dense_eigenvalues_capped(&nonint, model.dense_cap)?;
    let e1 = dense_eigenvalues_capped(&int, model.dense_cap)?;
    let total = e1
        .iter()
        .zip(&e0)
        .map(|(&a, &b)| phi.eval(a) - phi.eval(b))
        .sum::<f64>();
    Ok(total / spec.volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::AlloyParams;

    fn alloy_model(n: usize) -> ModelConfig {
        ModelConfig::new(1, n, 0.25).with_potential(PotentialDescriptor::Alloy(AlloyParams::default()), 5)
    }

    #[test]
    fn free_single_particle_closed_form() {
        let model = ModelConfig::new(1, 1, 0.5);
        let ids = single_particle_ids(&model, 5.0).unwrap();
        let m = ids.spec.points_per_axis();
        assert_eq!(m, 9);
        for (k, &b) in ids.counting.breakpoints().iter().enumerate() {
            let want = (2.0 / 0.25) * (1.0 - ((k + 1) as f64 * std::f64::consts::PI / (m + 1) as f64).cos());
            assert!((b - want).abs() < 1e-10);
        }
        assert!((ids.measure.total_mass() - 9.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn constant_potential_shifts_breakpoints() {
        let free = single_particle_ids(&ModelConfig::new(1, 1, 0.5), 5.0).unwrap();
        let shifted = single_particle_ids(
            &ModelConfig::new(1, 1, 0.5).with_potential(PotentialDescriptor::Constant { value: 3.0 }, 0),
            5.0,
        )
        .unwrap();
        assert_eq!(free.counting.raw_counts(), shifted.counting.raw_counts());
        for (a, b) in free.counting.breakpoints().iter().zip(shifted.counting.breakpoints()) {
            assert!((b - a - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_is_the_convolution_identity() {
        let f = counting_function_from_eigs(&[0.5, 1.0, 1.0, 4.0], 2.0).unwrap();
        let out = convolve_counting(&f, &SpectralMeasure::dirac(0.0), &ConvolutionOptions::default()).unwrap();
        assert_eq!(out.function, f);
        assert_eq!(out.bin_width, None);
    }

    #[test]
    fn pairwise_sums_with_multiplicity() {
        let (a, b) = (0.3, 1.1);
        let f = counting_function_from_eigs(&[a, b], 1.0).unwrap();
        let mu = spectral_measure_from_eigs(&[a, b], 1.0).unwrap();
        let out = convolve_counting(&f, &mu, &ConvolutionOptions::default())
            .unwrap()
            .function;
        let jumps = out.jumps();
        assert_eq!(jumps.len(), 3);
        let want = [(2.0 * a, 1.0), (a + b, 2.0), (2.0 * b, 1.0)];
        for ((e, w), (we, ww)) in jumps.iter().zip(want) {
            assert!((e - we).abs() < 1e-15);
            assert_eq!(*w, ww);
        }
    }

    #[test]
    fn binned_mode_conserves_mass() {
        let eigs: Vec<f64> = (0..40).map(|k| (k as f64 * 0.37).sin() + k as f64 * 0.1).collect();
        let mut sorted = eigs.clone();
        sorted.sort_by(f64::total_cmp);
        let f = counting_function_from_eigs(&sorted, 1.0).unwrap();
        let mu = spectral_measure_from_eigs(&sorted, 1.0).unwrap();
        let tight = ConvolutionOptions {
            exact_cap: 100,
            ..Default::default()
        };
        assert!(matches!(
            convolve_counting(&f, &mu, &tight),
            Err(IdsError::SizeCap { .. })
        ));
        let binned = ConvolutionOptions {
            bin_width: Some(0.05),
            ..tight
        };
        let out = convolve_counting(&f, &mu, &binned).unwrap();
        assert_eq!(out.bin_width, Some(0.05));
        assert_eq!(out.function.total_raw_mass(), 1600.0);
        // right-edge placement never overcounts
        let exact = convolve_counting(&f, &mu, &ConvolutionOptions::default())
            .unwrap()
            .function;
        for e in (0..200).map(|k| -1.0 + k as f64 * 0.05) {
            assert!(out.function.raw_value(e) <= exact.raw_value(e));
        }
    }

    #[test]
    fn one_particle_noninteracting_is_single_particle() {
        let model = alloy_model(1);
        let single = single_particle_ids(&model, 4.0).unwrap();
        let conv = noninteracting_ids(&model, 4.0, 1).unwrap();
        assert_eq!(conv.function, single.counting);
        let direct = noninteracting_ids_direct(&model, 4.0, 1).unwrap();
        assert_eq!(direct, single.counting);
    }

    #[test]
    fn two_particle_free_matches_dense_kronecker_sum() {
        let model = ModelConfig::new(1, 2, 1.0);
        let conv = noninteracting_ids(&model, 5.0, 2).unwrap().function;
        let direct = noninteracting_ids_direct(&model, 5.0, 2).unwrap();
        assert_eq!(conv.total_raw_mass(), 16.0);
        assert_eq!(direct.total_raw_mass(), 16.0);
        for &e in conv.breakpoints() {
            assert_eq!(conv.raw_value(e), direct.raw_value(e + 1e-9));
        }
        // mass of the convolution is the product of masses
        assert!((conv.total_mass() - (4.0f64 / 5.0).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn agreement_tolerates_rounding_inside_clusters() {
        let a = CountingFunction::new(vec![1.0, 2.0], vec![1.0, 3.0], 1.0).unwrap();
        let b = CountingFunction::new(vec![1.0 + 1e-12, 2.0 - 1e-12, 2.0], vec![1.0, 2.0, 3.0], 1.0).unwrap();
        assert!(lemma_agreement(&a, &b, MERGE_TOL).exact());
        let c = CountingFunction::new(vec![1.0, 2.0], vec![1.0, 2.0], 1.0).unwrap();
        let r = lemma_agreement(&a, &c, MERGE_TOL);
        assert_eq!((r.clusters, r.mismatches, r.max_raw_diff), (2, 1, 1.0));
    }

    #[test]
    fn zero_kernel_support_and_examples() {
        let spec = BoxSpec::new(1, 2, 8.0, 0.25, BoundaryCondition::Dirichlet).unwrap();
        let field = interaction_field(&InteractionKernel::Zero, &spec).unwrap();
        assert_eq!(support_fraction(&field, 0.1, &spec).unwrap().fraction, 0.0);
        assert!(support_fraction(&field, 0.0, &spec).is_err());
    }

    #[test]
    fn diagonal_band_lattice_count() {
        // radius 0.5, h = 0.25: separations 0 and ±0.25 exceed ε, ±0.5 is on
        // the edge of the support where the bump vanishes
        let kernel = InteractionKernel::CompactBump {
            radius: 0.5,
            height: 1.0,
        };
        for side in [8.0, 16.0] {
            let spec = BoxSpec::new(1, 2, side, 0.25, BoundaryCondition::Dirichlet).unwrap();
            let m = spec.points_per_axis();
            let field = interaction_field(&kernel, &spec).unwrap();
            let mut band = 0;
            for a in 0..m {
                for b in 0..m {
                    if a.abs_diff(b) <= 1 {
                        band += 1;
                    }
                }
            }
            assert_eq!(band, 3 * m - 2);
            let sf = support_fraction(&field, 0.1, &spec).unwrap();
            assert_eq!(sf.points, band);
            let want = 0.0625 * band as f64 / (side * side);
            assert!((sf.fraction - want).abs() < 1e-15);
            assert!((sf.scaled_constant - want * side).abs() < 1e-12);
        }
    }

    #[test]
    fn default_window_covers_ten_percent() {
        let f = counting_function_from_eigs(&(1..=100).map(f64::from).collect::<Vec<_>>(), 1.0).unwrap();
        let (lo, hi) = default_energy_window(&f).unwrap();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 10.0);
        assert!(f.raw_value(hi) >= 10.0);
        let grid = energy_grid((lo, hi), 11).unwrap();
        assert_eq!(grid.first(), Some(&0.0));
        assert_eq!(grid.last(), Some(&10.0));
        assert!(energy_grid((1.0, 1.0), 5).is_err());
    }

    #[test]
    fn slope_fit() {
        let x = [1.0f64, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| -0.5 * v + 2.0).collect();
        assert!((fit_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(fit_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn smoothed_trace_vanishes_without_interaction() {
        let model = alloy_model(2);
        let phi = MollifiedWindow {
            lo: 0.0,
            hi: 20.0,
            sigma: 0.5,
        };
        assert_eq!(
            smoothed_trace_diff(&model, 3.0, &InteractionKernel::Zero, &phi).unwrap(),
            0.0
        );
        let far = MollifiedWindow {
            lo: -500.0,
            hi: -400.0,
            sigma: 0.5,
        };
        let bump = InteractionKernel::CompactBump {
            radius: 0.5,
            height: 1.0,
        };
        assert_eq!(smoothed_trace_diff(&model, 3.0, &bump, &far).unwrap(), 0.0);
    }
}
