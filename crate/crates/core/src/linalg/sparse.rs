//! Row-compressed sparse lower-triangular matrices and their O(nnz) applies.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Sparse lower-triangular matrix with a full, strictly positive diagonal.
/// Column ids are sorted strictly increasing within each row, so the
/// diagonal is always the last entry of its row.
#[derive(Clone, Debug)]
pub struct SparseLowerTriangular {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseLowerTriangular {
    /// Builds from per-row `(columns, values)` pairs, validating the
    /// triangular structure.
    pub fn from_rows(rows: Vec<(Vec<usize>, Vec<f64>)>) -> Result<Self> {
        let dim = rows.len();
        let nnz: usize = rows.iter().map(|(c, _)| c.len()).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for (i, (c, v)) in rows.into_iter().enumerate() {
            if c.len() != v.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: column/value length mismatch"
                )));
            }
            if c.is_empty() || *c.last().unwrap() != i {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: diagonal entry missing"
                )));
            }
            if !c.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: columns not strictly increasing"
                )));
            }
            if c[0] > i {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: entry above the diagonal"
                )));
            }
            let diag = *v.last().unwrap();
            if diag <= 0.0 || diag.is_nan() {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: diagonal must be positive, got {diag}"
                )));
            }
            cols.extend_from_slice(&c);
            vals.extend_from_slice(&v);
            row_ptr.push(cols.len());
        }
        Ok(SparseLowerTriangular {
            dim,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            let (c, v) = self.row(i);
            for (j, x) in c.iter().zip(v) {
                m[(i, *j)] = *x;
            }
        }
        m
    }
}

/// `G v` (or `G' v` when `transpose`) in O(nnz).
pub fn sparse_tri_apply(g: &SparseLowerTriangular, v: &[f64], transpose: bool) -> Vec<f64> {
    assert_eq!(v.len(), g.dim(), "sparse_tri_apply: dimension mismatch");
    let mut out = vec![0.0; g.dim()];
    if transpose {
        for (i, &vi) in v.iter().enumerate() {
            let (cols, vals) = g.row(i);
            for (j, x) in cols.iter().zip(vals) {
                out[*j] += x * vi;
            }
        }
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            let (cols, vals) = g.row(i);
            let mut acc = 0.0;
            for (j, x) in cols.iter().zip(vals) {
                acc += x * v[*j];
            }
            *o = acc;
        }
    }
    out
}
