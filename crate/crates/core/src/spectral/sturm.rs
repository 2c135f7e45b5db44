use crate::error::{IdsError, Result};
use crate::sparse::SparseSymmetricOperator;

use super::counting_shift;

/// Number of eigenvalues `≤ energy` of a tridiagonal operator.
///
/// Counts negative terms of the Sturm sequence (the LDLᵀ pivots) of
/// `H - (E + τ)·I`, where `τ` is the closed-interval offset from
/// [`counting_shift`]. A pivot of magnitude below `pivmin` is replaced by
/// `-pivmin`.
pub fn sturm_count(op: &SparseSymmetricOperator, energy: f64) -> Result<usize> {
    let (diag, off) = op
        .tridiagonal_parts()
        .ok_or_else(|| IdsError::Usage("sturm_count requires a tridiagonal operator".into()))?;
    let shift = energy + counting_shift(op.spectral_scale());
    Ok(sturm_count_raw(&diag, &off, shift))
}

/// Number of pivots `< 0` of `T - shift·I` for the tridiagonal `T`.
pub fn sturm_count_raw(diag: &[f64], off: &[f64], shift: f64) -> usize {
    if diag.is_empty() {
        return 0;
    }
    let max_e2 = off.iter().map(|e| e * e).fold(1.0_f64, f64::max);
    let pivmin = f64::MIN_POSITIVE * max_e2;
    let mut count = 0;
    let mut q = diag[0] - shift;
    for i in 0.. {
        if q.abs() <= pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        if i + 1 == diag.len() {
            break;
        }
        q = (diag[i + 1] - shift) - off[i] * off[i] / q;
    }
    count
}
