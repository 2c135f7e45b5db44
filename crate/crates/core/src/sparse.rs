//! Compressed sparse symmetric operators.

use crate::error::{IdsError, Result};

/// Real symmetric matrix in compressed sparse row layout.
///
/// Both triangles are stored, columns within a row are sorted and every
/// diagonal entry is present (possibly zero). Values are bit-exactly
/// symmetric; constructors reject anything else.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    tridiagonal: bool,
}

impl SparseSymmetricOperator {
    /// Builds an operator from `(row, col, value)` triplets. Duplicates are
    /// summed. The caller supplies both triangles.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(IdsError::Dimension {
                    expected: dim,
                    got: i.max(j) + 1,
                });
            }
            if !v.is_finite() {
                return Err(IdsError::invalid("value", format!("non-finite entry at ({i}, {j})")));
            }
            rows[i].push((j, v));
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row.push((i, 0.0));
            // stable sort keeps insertion order of duplicates, so summation
            // order is fixed
            row.sort_by_key(|&(j, _)| j);
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            let mut iter = row.into_iter().peekable();
            while let Some((j, mut v)) = iter.next() {
                while let Some(&(j2, v2)) = iter.peek() {
                    if j2 != j {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_csr(dim, row_ptr, col_idx, values)
    }

    /// Wraps raw CSR arrays after checking layout and symmetry.
    pub fn from_csr(dim: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != dim + 1 || row_ptr[0] != 0 || row_ptr[dim] != col_idx.len() {
            return Err(IdsError::Usage("malformed row offsets".into()));
        }
        if col_idx.len() != values.len() {
            return Err(IdsError::Dimension {
                expected: col_idx.len(),
                got: values.len(),
            });
        }
        let mut tridiagonal = true;
        for i in 0..dim {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&j| j >= dim) {
                return Err(IdsError::Usage(format!("row {i} has unsorted or out-of-range columns")));
            }
            if cols.binary_search(&i).is_err() {
                return Err(IdsError::Usage(format!("row {i} is missing its diagonal")));
            }
            if cols.iter().any(|&j| j.abs_diff(i) > 1) {
                tridiagonal = false;
            }
        }
        let op = SparseSymmetricOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            tridiagonal,
        };
        for i in 0..dim {
            for (j, v) in op.row(i) {
                if op.get(j, i).map(f64::to_bits) != Some(v.to_bits()) {
                    return Err(IdsError::Usage(format!("entry ({i}, {j}) has no bit-equal transpose")));
                }
            }
        }
        Ok(op)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let triplets: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), &triplets)
    }

    /// Symmetric tridiagonal matrix from its diagonal and off-diagonal.
    pub fn from_tridiagonal(diag: &[f64], off: &[f64]) -> Result<Self> {
        let dim = diag.len();
        if dim > 0 && off.len() + 1 != dim {
            return Err(IdsError::Dimension {
                expected: dim.saturating_sub(1),
                got: off.len(),
            });
        }
        let mut triplets: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        for (i, &e) in off.iter().enumerate() {
            triplets.push((i, i + 1, e));
            triplets.push((i + 1, i, e));
        }
        Self::from_triplets(dim, &triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_tridiagonal(&self) -> bool {
        self.tridiagonal
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        let cols = &self.col_idx[range.clone()];
        cols.binary_search(&j).ok().map(|k| self.values[range.start + k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.get(i, i).expect("diagonal is always stored"))
            .collect()
    }

    /// Diagonal and first off-diagonal, if the pattern is tridiagonal.
    pub fn tridiagonal_parts(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if !self.tridiagonal {
            return None;
        }
        let off = (1..self.dim).map(|i| self.get(i, i - 1).unwrap_or(0.0)).collect();
        Some((self.diagonal(), off))
    }

    /// Returns a copy with `shift[i]` added to each diagonal entry. The
    /// sparsity pattern is unchanged.
    pub fn with_added_diagonal(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(IdsError::Dimension {
                expected: self.dim,
                got: shift.len(),
            });
        }
        let mut out = self.clone();
        for (i, &s) in shift.iter().enumerate() {
            let range = out.row_ptr[i]..out.row_ptr[i + 1];
            let k = out.col_idx[range.clone()]
                .binary_search(&i)
                .expect("diagonal is always stored");
            out.values[range.start + k] += s;
        }
        Ok(out)
    }

    /// `self + c·I`.
    pub fn shifted(&self, c: f64) -> Self {
        self.with_added_diagonal(&vec![c; self.dim])
            .expect("shift vector has operator length")
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        if self.dim == 0 {
            return (0.0, 0.0);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut centre = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    centre = v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(centre - radius);
            hi = hi.max(centre + radius);
        }
        (lo, hi)
    }

    /// Magnitude used to scale shift and pivot tolerances; never below one.
    pub fn spectral_scale(&self) -> f64 {
        let (lo, hi) = self.gershgorin_bounds();
        lo.abs().max(hi.abs()).max(1.0)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                a[i * n + j] = v;
            }
        }
        a
    }

    /// Sum of off-diagonal magnitudes of row `i`.
    pub fn off_diagonal_row_sum(&self, i: usize) -> f64 {
        self.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v.abs()).sum()
    }
}
