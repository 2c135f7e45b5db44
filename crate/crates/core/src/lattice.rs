//! Finite-difference discretization of one- and many-particle Schrödinger
//! operators on boxes.
//!
//! Grid points are ordered row-major over the `n·d` product axes, particle 1
//! slowest and, within a particle, coordinate 1 slowest. Every field and
//! operator in the crate uses this ordering, so a many-particle index `p`
//! decomposes as `p = Σ_k s_k · M^(n-1-k)` with `M = m^d` and `s_k` the
//! single-particle index of particle `k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IdsError, Result};
use crate::sparse::SparseSymmetricOperator;

/// Default cap on the many-particle dimension `m^(n·d)`.
pub const DEFAULT_DIM_CAP: u128 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    #[default]
    Dirichlet,
    /// Mirrored stencil at the outermost grid points.
    Neumann,
}

/// Geometry of the product box `Λ(0,L)^n` in `d` dimensions at mesh `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    d: usize,
    n: usize,
    side: f64,
    h: f64,
    bc: BoundaryCondition,
    m: usize,
}

impl BoxSpec {
    pub fn new(d: usize, n: usize, side: f64, h: f64, bc: BoundaryCondition) -> Result<Self> {
        Self::with_cap(d, n, side, h, bc, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(d: usize, n: usize, side: f64, h: f64, bc: BoundaryCondition, cap: u128) -> Result<Self> {
        if d == 0 {
            return Err(IdsError::invalid("d", "spatial dimension must be at least 1"));
        }
        if n == 0 {
            return Err(IdsError::invalid("n", "particle count must be at least 1"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(IdsError::invalid(
                "h",
                format!("mesh spacing must be positive, got {h}"),
            ));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(IdsError::invalid(
                "L",
                format!("side length must be positive, got {side}"),
            ));
        }
        let cells = (side / h).round();
        if cells < 2.0 {
            return Err(IdsError::invalid(
                "L",
                format!("L/h = {} leaves no interior grid point", side / h),
            ));
        }
        let m = cells as usize - 1;
        let size = (m as u128).checked_pow((n * d) as u32).unwrap_or(u128::MAX);
        if size > cap {
            return Err(IdsError::SizeCap {
                what: "m^(n*d)",
                size,
                cap,
            });
        }
        Ok(BoxSpec { d, n, side, h, bc, m })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Side length as requested.
    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Interior points per axis, `round(L/h) - 1`.
    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    /// Side length realized by the grid, `(m + 1)·h`.
    pub fn effective_side(&self) -> f64 {
        (self.m + 1) as f64 * self.h
    }

    pub fn single_particle_dim(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    pub fn dim(&self) -> usize {
        self.m.pow((self.n * self.d) as u32)
    }

    /// Physical volume `L^(n·d)` of the product box, using the effective side.
    pub fn volume(&self) -> f64 {
        self.effective_side().powi((self.n * self.d) as i32)
    }

    pub fn single_particle_volume(&self) -> f64 {
        self.effective_side().powi(self.d as i32)
    }

    /// Same box for a different particle count.
    pub fn with_particles(&self, n: usize) -> Result<Self> {
        Self::new(self.d, n, self.side, self.h, self.bc)
    }

    /// Coordinates of single-particle grid point `s`, box centred at the origin.
    pub fn point(&self, s: usize) -> Vec<f64> {
        let half = 0.5 * self.effective_side();
        let mut coords = vec![0.0; self.d];
        let mut rest = s;
        for axis in (0..self.d).rev() {
            let c = rest % self.m;
            rest /= self.m;
            coords[axis] = -half + (c + 1) as f64 * self.h;
        }
        coords
    }

    /// Single-particle indices `(s_1, …, s_n)` of a many-particle index.
    pub fn particle_indices(&self, p: usize) -> Vec<usize> {
        let big_m = self.single_particle_dim();
        let mut out = vec![0; self.n];
        let mut rest = p;
        for k in (0..self.n).rev() {
            out[k] = rest % big_m;
            rest /= big_m;
        }
        out
    }
}

/// Negative Laplacian on the `m^(n·d)` product grid, second-order central
/// differences.
pub fn discretize_laplacian(spec: &BoxSpec) -> Result<SparseSymmetricOperator> {
    let axes = spec.n * spec.d;
    let m = spec.m;
    let dim = spec.dim();
    let inv_h2 = 1.0 / (spec.h * spec.h);
    let strides: Vec<usize> = (0..axes).map(|a| m.pow((axes - 1 - a) as u32)).collect();

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col_idx = Vec::with_capacity(dim * (2 * axes + 1));
    let mut values = Vec::with_capacity(dim * (2 * axes + 1));
    row_ptr.push(0);
    for p in 0..dim {
        let mut diag = 0.0;
        let coords: Vec<usize> = strides.iter().map(|&s| (p / s) % m).collect();
        for (&c, &s) in coords.iter().zip(&strides) {
            if c > 0 {
                col_idx.push(p - s);
                values.push(-inv_h2);
            }
        }
        for &c in &coords {
            diag += match spec.bc {
                BoundaryCondition::Dirichlet => 2.0,
                BoundaryCondition::Neumann => f64::from(u8::from(c > 0)) + f64::from(u8::from(c + 1 < m)),
            } * inv_h2;
        }
        col_idx.push(p);
        values.push(diag);
        for (&c, &s) in coords.iter().zip(&strides).rev() {
            if c + 1 < m {
                col_idx.push(p + s);
                values.push(-inv_h2);
            }
        }
        row_ptr.push(col_idx.len());
    }
    SparseSymmetricOperator::from_csr(dim, row_ptr, col_idx, values)
}

fn default_one() -> f64 {
    1.0
}

/// Parameters of an alloy-type background `V(x) = Σ_j ω_j u(x - j·a)`.
///
/// Couplings `ω_j` are uniform on `[0, coupling_max]`; `u` is a Gaussian of
/// peak `bump_height` and width `bump_radius / 2`, truncated at
/// `|x| < bump_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlloyParams {
    #[serde(default = "default_one")]
    pub coupling_max: f64,
    #[serde(default = "default_one")]
    pub bump_height: f64,
    /// Site spacing `a`.
    #[serde(default = "default_one")]
    pub spacing: f64,
    #[serde(default = "default_one")]
    pub bump_radius: f64,
}

impl Default for AlloyParams {
    fn default() -> Self {
        AlloyParams {
            coupling_max: 1.0,
            bump_height: 1.0,
            spacing: 1.0,
            bump_radius: 1.0,
        }
    }
}

impl AlloyParams {
    pub fn bump(&self, r2: f64) -> f64 {
        let radius2 = self.bump_radius * self.bump_radius;
        if r2 >= radius2 {
            return 0.0;
        }
        let sigma = 0.5 * self.bump_radius;
        self.bump_height * (-r2 / (2.0 * sigma * sigma)).exp()
    }
}

/// One-particle background potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialDescriptor {
    Constant {
        value: f64,
    },
    /// `amplitude · Σ_k cos(2π x_k / period)`.
    Periodic {
        amplitude: f64,
        period: f64,
    },
    Alloy(AlloyParams),
}

impl Default for PotentialDescriptor {
    fn default() -> Self {
        PotentialDescriptor::Constant { value: 0.0 }
    }
}

impl PotentialDescriptor {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialDescriptor::Constant { value } if !value.is_finite() => {
                Err(IdsError::invalid("value", "constant potential must be finite"))
            }
            PotentialDescriptor::Periodic { amplitude, period } => {
                if !amplitude.is_finite() {
                    return Err(IdsError::invalid("amplitude", "must be finite"));
                }
                if !(period.is_finite() && period > 0.0) {
                    return Err(IdsError::invalid("period", "must be positive"));
                }
                Ok(())
            }
            PotentialDescriptor::Alloy(p) => {
                if !(p.coupling_max.is_finite() && p.coupling_max >= 0.0) {
                    return Err(IdsError::invalid("coupling_max", "must be non-negative"));
                }
                if !p.bump_height.is_finite() {
                    return Err(IdsError::invalid("bump_height", "must be finite"));
                }
                if !(p.spacing.is_finite() && p.spacing > 0.0) {
                    return Err(IdsError::invalid("spacing", "must be positive"));
                }
                if !(p.bump_radius.is_finite() && p.bump_radius > 0.0) {
                    return Err(IdsError::invalid("bump_radius", "must be positive"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether the samples depend on the seed.
    pub fn is_random(&self) -> bool {
        matches!(self, PotentialDescriptor::Alloy(_))
    }
}

/// Samples of `V₁` at the single-particle grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub values: Vec<f64>,
    pub descriptor: PotentialDescriptor,
    pub seed: u64,
}

/// SplitMix64 output function; a bijection on `u64`.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn site_stream(site: &[i64]) -> u64 {
    site.iter().fold(0x6a09_e667_f3bc_c908, |acc, &j| {
        mix64(acc ^ (j as u64).wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

/// Coupling of alloy site `j`. Each site draws from its own ChaCha stream,
/// so a realization restricted to a smaller box agrees with the larger one.
pub fn alloy_coupling(seed: u64, site: &[i64], coupling_max: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(site_stream(site));
    rng.gen::<f64>() * coupling_max
}

pub fn sample_potential(descriptor: &PotentialDescriptor, spec: &BoxSpec, seed: u64) -> Result<PotentialField> {
    descriptor.validate()?;
    let dim = spec.single_particle_dim();
    let values = match *descriptor {
        PotentialDescriptor::Constant { value } => vec![value; dim],
        PotentialDescriptor::Periodic { amplitude, period } => (0..dim)
            .map(|s| {
                spec.point(s)
                    .iter()
                    .map(|&x| amplitude * (std::f64::consts::TAU * x / period).cos())
                    .sum()
            })
            .collect(),
        PotentialDescriptor::Alloy(params) => sample_alloy(&params, spec, seed),
    };
    Ok(PotentialField {
        values,
        descriptor: *descriptor,
        seed,
    })
}

fn sample_alloy(params: &AlloyParams, spec: &BoxSpec, seed: u64) -> Vec<f64> {
    let a = params.spacing;
    let reach = params.bump_radius;
    (0..spec.single_particle_dim())
        .map(|s| {
            let x = spec.point(s);
            let ranges: Vec<(i64, i64)> = x
                .iter()
                .map(|&xc| (((xc - reach) / a).ceil() as i64, ((xc + reach) / a).floor() as i64))
                .collect();
            let mut total = 0.0;
            let mut site: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            if ranges.iter().any(|r| r.0 > r.1) {
                return 0.0;
            }
            loop {
                let r2: f64 = site.iter().zip(&x).map(|(&j, &xc)| (xc - j as f64 * a).powi(2)).sum();
                let u = params.bump(r2);
                if u != 0.0 {
                    total += alloy_coupling(seed, &site, params.coupling_max) * u;
                }
                // odometer over the site box
                let mut axis = site.len();
                loop {
                    if axis == 0 {
                        return total;
                    }
                    axis -= 1;
                    if site[axis] < ranges[axis].1 {
                        site[axis] += 1;
                        break;
                    }
                    site[axis] = ranges[axis].0;
                }
            }
        })
        .collect()
}

/// Lifts `V₁` to `V_n(x₁,…,x_n) = Σ_k V₁(x_k)` on the product grid.
pub fn lift_potential(p: &PotentialField, spec: &BoxSpec) -> Result<Vec<f64>> {
    let single = spec.single_particle_dim();
    if p.values.len() != single {
        return Err(IdsError::Dimension {
            expected: single,
            got: p.values.len(),
        });
    }
    let mut lifted = p.values.clone();
    for _ in 1..spec.n {
        let mut next = Vec::with_capacity(lifted.len() * single);
        for &head in &lifted {
            next.extend(p.values.iter().map(|&v| head + v));
        }
        lifted = next;
    }
    Ok(lifted)
}

/// Pair interaction profile `V` of hypothesis-style models: non-negative
/// and decaying at infinity for every physical variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionKernel {
    #[default]
    Zero,
    /// `height · exp(1 - 1/(1 - |x|²/r²))` for `|x| < r`, zero outside.
    CompactBump { radius: f64, height: f64 },
    /// `e^{-|x|} / max(|x|, regularization)`; `None` means one mesh spacing.
    Yukawa {
        #[serde(default)]
        regularization: Option<f64>,
    },
    /// `1 / max(|x|, regularization)`; `None` means one mesh spacing.
    Coulomb {
        #[serde(default)]
        regularization: Option<f64>,
    },
    /// Flat value everywhere. Not a physical kernel; used to exercise the
    /// hypothesis checks.
    Constant { value: f64 },
}

impl InteractionKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InteractionKernel::CompactBump { radius, height } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(IdsError::invalid("radius", "bump radius must be positive"));
                }
                if !height.is_finite() {
                    return Err(IdsError::invalid("height", "must be finite"));
                }
            }
            InteractionKernel::Yukawa {
                regularization: Some(r),
            }
            | InteractionKernel::Coulomb {
                regularization: Some(r),
            } if !(r.is_finite() && r > 0.0) => {
                return Err(IdsError::invalid("regularization", "must be positive"));
            }
            InteractionKernel::Constant { value } if !value.is_finite() => {
                return Err(IdsError::invalid("value", "must be finite"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Fills an unset regularization length with the mesh spacing.
    pub fn resolved(self, h: f64) -> Self {
        match self {
            InteractionKernel::Yukawa { regularization } => InteractionKernel::Yukawa {
                regularization: Some(regularization.unwrap_or(h)),
            },
            InteractionKernel::Coulomb { regularization } => InteractionKernel::Coulomb {
                regularization: Some(regularization.unwrap_or(h)),
            },
            other => other,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, InteractionKernel::Zero)
    }

    /// Kernel value at separation `x`. Unresolved regularizations use one
    /// length unit.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.eval_radial(r2.sqrt())
    }

    pub fn eval_radial(&self, r: f64) -> f64 {
        match *self {
            InteractionKernel::Zero => 0.0,
            InteractionKernel::CompactBump { radius, height } => {
                let s = (r / radius).powi(2);
                if s >= 1.0 {
                    0.0
                } else {
                    height * (1.0 - 1.0 / (1.0 - s)).exp()
                }
            }
            InteractionKernel::Yukawa { regularization } => (-r).exp() / r.max(regularization.unwrap_or(1.0)),
            InteractionKernel::Coulomb { regularization } => 1.0 / r.max(regularization.unwrap_or(1.0)),
            InteractionKernel::Constant { value } => value,
        }
    }
}

/// Samples `V_i(x₁,…,x_n) = Σ_{k<l} V(x_k − x_l)` on the product grid.
pub fn interaction_field(kernel: &InteractionKernel, spec: &BoxSpec) -> Result<Vec<f64>> {
    kernel.validate()?;
    let dim = spec.dim();
    if spec.n < 2 || kernel.is_zero() {
        return Ok(vec![0.0; dim]);
    }
    let kernel = kernel.resolved(spec.h);
    let single = spec.single_particle_dim();
    let points: Vec<Vec<f64>> = (0..single).map(|s| spec.point(s)).collect();
    let mut table = vec![0.0; single * single];
    let mut sep = vec![0.0; spec.d];
    for (a, xa) in points.iter().enumerate() {
        for (b, xb) in points.iter().enumerate() {
            for ((s, &u), &v) in sep.iter_mut().zip(xa).zip(xb) {
                *s = u - v;
            }
            table[a * single + b] = kernel.eval(&sep);
        }
    }
    let mut field = Vec::with_capacity(dim);
    let mut idx = vec![0usize; spec.n];
    for p in 0..dim {
        let mut rest = p;
        for k in (0..spec.n).rev() {
            idx[k] = rest % single;
            rest /= single;
        }
        let mut total = 0.0;
        for k in 0..spec.n {
            for l in k + 1..spec.n {
                total += table[idx[k] * single + idx[l]];
            }
        }
        field.push(total);
    }
    Ok(field)
}

/// `lap + diag(Σ fields)`.
pub fn assemble_hamiltonian(lap: &SparseSymmetricOperator, diag_fields: &[&[f64]]) -> Result<SparseSymmetricOperator> {
    let mut total = vec![0.0; lap.dim()];
    for field in diag_fields {
        if field.len() != lap.dim() {
            return Err(IdsError::Dimension {
                expected: lap.dim(),
                got: field.len(),
            });
        }
        for (t, &v) in total.iter_mut().zip(field.iter()) {
            *t += v;
        }
    }
    lap.with_added_diagonal(&total)
}

/// Outcome of the non-negativity and decay checks on a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct H2Report {
    /// Smallest sampled value over all radii.
    pub min_value: f64,
    /// Largest sampled value at radii `≥ r_check`.
    pub tail_max: f64,
    pub nonnegative: bool,
    pub decays: bool,
}

impl H2Report {
    pub fn passed(&self) -> bool {
        self.nonnegative && self.decays
    }
}

/// Samples `kernel` along axis and diagonal rays in `d` dimensions. The
/// kernel passes when every sample is `≥ 0` and every sample at radius
/// `≥ r_check` is `≤ tol`.
pub fn check_hypothesis_h2(kernel: &InteractionKernel, d: usize, r_check: f64, tol: f64) -> Result<H2Report> {
    if !(r_check.is_finite() && r_check > 0.0) {
        return Err(IdsError::invalid("r_check", "must be positive"));
    }
    if d == 0 {
        return Err(IdsError::invalid("d", "must be at least 1"));
    }
    let mut directions = Vec::new();
    for axis in 0..d {
        let mut e = vec![0.0; d];
        e[axis] = 1.0;
        directions.push(e.clone());
        e[axis] = -1.0;
        directions.push(e);
    }
    let diag = 1.0 / (d as f64).sqrt();
    directions.push(vec![diag; d]);
    directions.push(vec![-diag; d]);

    const INNER: usize = 256;
    let mut inner_radii: Vec<f64> = (0..INNER).map(|k| r_check * k as f64 / INNER as f64).collect();
    let tail_radii: Vec<f64> = [1.0, 1.001, 1.01, 1.1, 1.5, 2.0, 4.0, 8.0, 16.0, 64.0]
        .iter()
        .map(|f| f * r_check)
        .collect();
    inner_radii.extend_from_slice(&tail_radii);

    let mut min_value = f64::INFINITY;
    let mut tail_max = f64::NEG_INFINITY;
    for dir in &directions {
        for &r in &inner_radii {
            let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            let v = kernel.eval(&x);
            min_value = min_value.min(v);
            if r >= r_check {
                tail_max = tail_max.max(v);
            }
        }
    }
    Ok(H2Report {
        min_value,
        tail_max,
        nonnegative: min_value >= 0.0,
        decays: tail_max <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec1(m: usize, n: usize, bc: BoundaryCondition) -> BoxSpec {
        BoxSpec::new(1, n, (m + 1) as f64, 1.0, bc).unwrap()
    }

    #[test]
    fn box_rejects_bad_geometry() {
        let bc = BoundaryCondition::Dirichlet;
        assert!(matches!(
            BoxSpec::new(1, 2, 8.0, -0.25, bc),
            Err(IdsError::InvalidParameter { name: "h", .. })
        ));
        assert!(BoxSpec::new(1, 1, 1.0, 1.0, bc).is_err());
        assert!(matches!(
            BoxSpec::new(3, 4, 100.0, 0.5, bc),
            Err(IdsError::SizeCap { .. })
        ));
        let spec = BoxSpec::new(1, 2, 8.0, 0.25, bc).unwrap();
        assert_eq!(spec.points_per_axis(), 31);
        assert_eq!(spec.dim(), 961);
        assert_eq!(spec.volume(), 64.0);
    }

    #[test]
    fn dirichlet_three_point_stencil() {
        let lap = discretize_laplacian(&spec1(3, 1, BoundaryCondition::Dirichlet)).unwrap();
        assert_eq!(lap.to_dense(), vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        assert!(lap.is_tridiagonal());
    }

    #[test]
    fn neumann_has_constant_null_mode() {
        let lap = discretize_laplacian(&spec1(3, 1, BoundaryCondition::Neumann)).unwrap();
        assert_eq!(lap.to_dense(), vec![1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        for i in 0..3 {
            let row_sum: f64 = lap.row(i).map(|(_, v)| v).sum();
            assert_eq!(row_sum, 0.0);
        }
    }

    #[test]
    fn stencil_bound_holds() {
        let spec = BoxSpec::new(2, 2, 2.5, 0.5, BoundaryCondition::Dirichlet).unwrap();
        let lap = discretize_laplacian(&spec).unwrap();
        let bound = 2.0 * 4.0 / 0.25;
        for i in 0..lap.dim() {
            assert!(lap.off_diagonal_row_sum(i) <= bound);
        }
        assert!(!lap.is_tridiagonal());
    }

    #[test]
    fn zero_and_deterministic_potentials() {
        let spec = BoxSpec::new(1, 1, 8.0, 0.5, BoundaryCondition::Dirichlet).unwrap();
        let zero = sample_potential(&PotentialDescriptor::default(), &spec, 1).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let alloy = PotentialDescriptor::Alloy(AlloyParams::default());
        let a = sample_potential(&alloy, &spec, 7).unwrap();
        let b = sample_potential(&alloy, &spec, 7).unwrap();
        let c = sample_potential(&alloy, &spec, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn alloy_restricts_consistently_to_smaller_boxes() {
        // h = 0.5: the L = 8 grid is a subset of the L = 16 grid
        let alloy = PotentialDescriptor::Alloy(AlloyParams::default());
        let small = BoxSpec::new(1, 1, 8.0, 0.5, BoundaryCondition::Dirichlet).unwrap();
        let large = BoxSpec::new(1, 1, 16.0, 0.5, BoundaryCondition::Dirichlet).unwrap();
        let vs = sample_potential(&alloy, &small, 3).unwrap();
        let vl = sample_potential(&alloy, &large, 3).unwrap();
        for (s, &v) in vs.values.iter().enumerate() {
            let x = small.point(s)[0];
            let sl = large
                .point(0)
                .first()
                .map(|&x0| ((x - x0) / 0.5).round() as usize)
                .unwrap();
            assert_eq!(large.point(sl)[0], x);
            assert_eq!(vl.values[sl], v);
        }
    }

    #[test]
    fn alloy_max_respects_overlap_bound() {
        let params = AlloyParams {
            coupling_max: 0.7,
            bump_height: 2.0,
            spacing: 1.0,
            bump_radius: 1.3,
        };
        let spec = BoxSpec::new(1, 1, 20.0, 0.1, BoundaryCondition::Dirichlet).unwrap();
        let field = sample_potential(&PotentialDescriptor::Alloy(params), &spec, 11).unwrap();
        // brute force the number of sites within reach of any grid point
        let mut overlap = 0;
        for s in 0..spec.single_particle_dim() {
            let x = spec.point(s)[0];
            let count = (-30..=30)
                .filter(|&j| (x - j as f64).abs() < params.bump_radius)
                .count();
            overlap = overlap.max(count);
        }
        let max = field.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(max <= 0.7 * 2.0 * overlap as f64);
        assert!(field.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn lift_examples() {
        let spec = BoxSpec::new(1, 2, 3.0, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let p = PotentialField {
            values: vec![1.0, 2.0],
            descriptor: PotentialDescriptor::default(),
            seed: 0,
        };
        assert_eq!(lift_potential(&p, &spec).unwrap(), vec![2.0, 3.0, 3.0, 4.0]);
        let one = spec.with_particles(1).unwrap();
        assert_eq!(lift_potential(&p, &one).unwrap(), p.values);
    }

    #[test]
    fn interaction_field_examples() {
        let spec = BoxSpec::new(1, 1, 6.0, 0.5, BoundaryCondition::Dirichlet).unwrap();
        let bump = InteractionKernel::CompactBump {
            radius: 0.3,
            height: 1.5,
        };
        assert!(interaction_field(&bump, &spec).unwrap().iter().all(|&v| v == 0.0));

        let spec2 = spec.with_particles(2).unwrap();
        let field = interaction_field(&bump, &spec2).unwrap();
        let m = spec2.points_per_axis();
        for a in 0..m {
            for b in 0..m {
                let expected = if a == b { 1.5 } else { 0.0 };
                assert_eq!(field[a * m + b], expected);
            }
        }
    }

    #[test]
    fn assemble_examples() {
        let lap = SparseSymmetricOperator::from_diagonal(&[2.0 / 0.25]).unwrap();
        let out = assemble_hamiltonian(&lap, &[&[5.0]]).unwrap();
        assert_eq!(out.to_dense(), vec![8.0 + 5.0]);
        assert_eq!(assemble_hamiltonian(&lap, &[]).unwrap(), lap);
        assert!(matches!(
            assemble_hamiltonian(&lap, &[&[1.0, 2.0]]),
            Err(IdsError::Dimension { .. })
        ));
    }

    #[test]
    fn h2_examples() {
        let bump = InteractionKernel::CompactBump {
            radius: 0.5,
            height: 1.0,
        };
        let report = check_hypothesis_h2(&bump, 1, 1.0, 1e-12).unwrap();
        assert_eq!(report.tail_max, 0.0);
        assert!(report.passed());

        let coulomb = InteractionKernel::Coulomb {
            regularization: Some(0.25),
        };
        let report = check_hypothesis_h2(&coulomb, 3, 100.0, 0.02).unwrap();
        assert_eq!(report.tail_max, 0.01);
        assert!(report.passed());

        let negative = InteractionKernel::Constant { value: -1.0 };
        let report = check_hypothesis_h2(&negative, 1, 10.0, 0.5).unwrap();
        assert!(!report.nonnegative);
        assert!(!report.passed());

        assert!(check_hypothesis_h2(&bump, 1, 0.0, 0.1).is_err());
    }

    #[test]
    fn regularized_kernels_are_bounded() {
        let yukawa = InteractionKernel::Yukawa { regularization: None }.resolved(0.25);
        assert_eq!(yukawa.eval(&[0.0]), 4.0);
        let coulomb = InteractionKernel::Coulomb { regularization: None }.resolved(0.5);
        assert_eq!(coulomb.eval(&[0.0, 0.0]), 2.0);
        assert_eq!(coulomb.eval(&[3.0, 4.0]), 0.2);
    }
}
