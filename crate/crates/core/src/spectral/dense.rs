//! Dense symmetric eigenvalues: Householder tridiagonalization followed by
//! implicit-shift QL iteration. Used as the reference counter for small
//! operators and as the source of single-particle spectra.

use crate::error::{IdsError, Result};
use crate::sparse::SparseSymmetricOperator;

pub const DEFAULT_DENSE_CAP: usize = 4096;

const MAX_QL_SWEEPS: usize = 60;

/// All eigenvalues of `op`, ascending.
pub fn dense_eigenvalues(op: &SparseSymmetricOperator) -> Result<Vec<f64>> {
    dense_eigenvalues_capped(op, DEFAULT_DENSE_CAP)
}

pub fn dense_eigenvalues_capped(op: &SparseSymmetricOperator, cap: usize) -> Result<Vec<f64>> {
    if op.dim() > cap {
        return Err(IdsError::SizeCap {
            what: "dense eigensolve dimension",
            size: op.dim() as u128,
            cap: cap as u128,
        });
    }
    if let Some((d, e)) = op.tridiagonal_parts() {
        return tridiagonal_eigenvalues(d, e);
    }
    let n = op.dim();
    let (d, e) = householder_tridiagonalize(op.to_dense(), n);
    tridiagonal_eigenvalues(d, e)
}

/// Reduces the row-major symmetric matrix `a` to tridiagonal form.
/// Returns the diagonal and the `n - 1` off-diagonal entries.
fn householder_tridiagonalize(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sub = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let row_i = &a[i * n..i * n + i];
        let scale: f64 = row_i.iter().map(|x| x.abs()).sum();
        if l == 0 || scale == 0.0 {
            sub[i] = a[i * n + l];
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            v[k] = a[i * n + k] / scale;
            h += v[k] * v[k];
        }
        let f = v[l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        sub[i] = scale * g;
        h -= f * g;
        v[l] = f - g;

        let u = &v[..=l];
        for j in 0..=l {
            let row = &a[j * n..j * n + l + 1];
            p[j] = row.iter().zip(u).map(|(x, y)| x * y).sum::<f64>() / h;
        }
        let kk = u.iter().zip(&p[..=l]).map(|(x, y)| x * y).sum::<f64>() / (2.0 * h);
        for j in 0..=l {
            p[j] -= kk * v[j];
        }
        for j in 0..=l {
            let (vj, qj) = (v[j], p[j]);
            let row = &mut a[j * n..j * n + l + 1];
            for ((x, &vk), &qk) in row.iter_mut().zip(&v[..=l]).zip(&p[..=l]) {
                *x -= vj * qk + qj * vk;
            }
        }
        // row i now only couples to l
        for k in 0..=l {
            a[i * n + k] = 0.0;
            a[k * n + i] = 0.0;
        }
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    let off = if n > 0 { sub[1..].to_vec() } else { Vec::new() };
    (diag, off)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal
/// matrix. Returns the eigenvalues ascending.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    let mut e = off;
    e.resize(n, 0.0);
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(IdsError::Usage(format!(
                    "QL iteration did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}
