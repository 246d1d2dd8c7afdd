//! Factorized sparse approximate inverse: a sparse lower-triangular `G` with
//! `G' G ~ S^{-1}`, computed row by row from only the pattern-restricted
//! entries of `S`. Rows are independent and run in parallel.

use crate::error::{Error, Result};
use crate::geometry::{knn_pattern, PointSet, SparsityPattern};
use crate::kernel::KernelSpec;
use crate::linalg::dense::{cholesky, spd_solve, JitterPolicy};
use crate::linalg::sparse::{sparse_tri_apply, SparseLowerTriangular};
use crate::precond::schur::{RegularizedKernelOracle, SpdOracle};
use rayon::prelude::*;

/// Builds the FSAI factor of `S^{-1}` for the given lower-triangular
/// pattern: row `i` solves `S[J, J] y = e_i` over its pattern set `J` and
/// stores `y / sqrt(y_i)`, which normalizes `diag(G S G') = 1`.
pub fn build_fsai<O: SpdOracle>(
    oracle: &O,
    pattern: &SparsityPattern,
) -> Result<SparseLowerTriangular> {
    let m = oracle.dim();
    if pattern.dim() != m {
        return Err(Error::InvalidArgument(format!(
            "pattern dimension {} does not match oracle dimension {}",
            pattern.dim(),
            m
        )));
    }
    for i in 0..m {
        let row = pattern.row(i);
        if row.is_empty() || *row.last().unwrap() != i || !row.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "pattern row {i} must be sorted, lower-triangular, and contain its diagonal"
            )));
        }
    }

    let policy = JitterPolicy::default();
    let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let idx = pattern.row(i);
            let local = oracle.gather(idx);
            let chol = cholesky(&local, &policy).map_err(|e| Error::FsaiRow {
                row: i,
                source: Box::new(e),
            })?;
            let mut rhs = vec![0.0; idx.len()];
            *rhs.last_mut().unwrap() = 1.0;
            let y = spd_solve(&chol, &rhs);
            let yi = *y.last().unwrap();
            if yi <= 0.0 || !yi.is_finite() {
                return Err(Error::FsaiRow {
                    row: i,
                    source: Box::new(Error::InvalidArgument(format!(
                        "local solve produced non-positive diagonal weight {yi}"
                    ))),
                });
            }
            let inv_sqrt = 1.0 / yi.sqrt();
            let vals: Vec<f64> = y.iter().map(|v| v * inv_sqrt).collect();
            Ok((idx.to_vec(), vals))
        })
        .collect::<Result<Vec<_>>>()?;

    SparseLowerTriangular::from_rows(rows)
}

/// FSAI applied directly to `K + mu I` over the full point set in its given
/// order, with a w-nearest-neighbor pattern. The preconditioner action is
/// `v -> G' (G v)`.
pub fn build_fsai_plain(
    spec: &KernelSpec,
    ps: &PointSet,
    w: usize,
) -> Result<SparseLowerTriangular> {
    let ids: Vec<usize> = (0..ps.len()).collect();
    let pattern = knn_pattern(ps, &ids, w)?;
    let oracle = RegularizedKernelOracle::new(spec, ps, ids);
    build_fsai(&oracle, &pattern)
}

/// The inverse action `G' G v` of an FSAI factor.
pub fn apply_fsai_inv(g: &SparseLowerTriangular, v: &[f64]) -> Vec<f64> {
    let gv = sparse_tri_apply(g, v, false);
    sparse_tri_apply(g, &gv, true)
}
