//! Entry oracles for SPD matrices that are too expensive to materialize,
//! chiefly the regularized Schur complement
//! `S = K22 + mu I - K12' (K11 + mu I)^{-1} K12`.

use crate::error::Result;
use crate::geometry::{sq_dist, PointSet};
use crate::kernel::{assemble_block, KernelSpec};
use crate::linalg::dense::{forward_solve_rows, tri_solve, CholeskyFactor, TriMode};
use crate::mat::{dot, Mat};
use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

/// Entry access to a symmetric positive definite matrix. FSAI rows only ever
/// touch the entries inside their sparsity pattern, so this is the whole
/// interface it needs.
pub trait SpdOracle: Sync {
    fn dim(&self) -> usize;

    fn entry(&self, a: usize, b: usize) -> f64;

    /// Dense principal submatrix over `idx`.
    fn gather(&self, idx: &[usize]) -> Mat {
        let mut m = Mat::zeros(idx.len(), idx.len());
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate().take(i + 1) {
                let v = self.entry(a, b);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// A plain dense SPD matrix as an oracle (tests and small instances).
pub struct DenseSpdOracle<'a> {
    pub mat: &'a Mat,
}

impl SpdOracle for DenseSpdOracle<'_> {
    fn dim(&self) -> usize {
        self.mat.nrows()
    }
    fn entry(&self, a: usize, b: usize) -> f64 {
        self.mat[(a, b)]
    }
}

/// The regularized kernel matrix `K + mu I` restricted to `ids`, evaluated
/// entry by entry.
pub struct RegularizedKernelOracle<'a> {
    spec: &'a KernelSpec,
    ps: &'a PointSet,
    ids: Vec<usize>,
}

impl<'a> RegularizedKernelOracle<'a> {
    pub fn new(spec: &'a KernelSpec, ps: &'a PointSet, ids: Vec<usize>) -> Self {
        RegularizedKernelOracle { spec, ps, ids }
    }
}

impl SpdOracle for RegularizedKernelOracle<'_> {
    fn dim(&self) -> usize {
        self.ids.len()
    }
    fn entry(&self, a: usize, b: usize) -> f64 {
        let v = self.spec.eval_sq_dist(sq_dist(
            self.ps.point(self.ids[a]),
            self.ps.point(self.ids[b]),
        ));
        if a == b {
            v + self.spec.mu()
        } else {
            v
        }
    }
}

/// Default memory budget for caching `V = L^{-1} K12` whole: 2 GiB.
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

enum VStorage {
    /// Row `a` holds the column `V[:, a]`, i.e. `L^{-1} k(X_k, x_a)`.
    Full(Mat),
    /// Columns computed on demand behind an LRU cache.
    Lazy {
        cache: Mutex<LruColumns>,
        capacity: usize,
    },
}

struct LruColumns {
    map: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
}

/// Entry oracle for `S = K22 + mu I - K12' (K11 + mu I)^{-1} K12` over the
/// non-landmark points:
/// `S[a, b] = k(x_a, x_b) + mu [a = b] - <V[:, a], V[:, b]>`.
///
/// `V` is materialized whole when `k * m` doubles fit the memory budget,
/// otherwise columns are computed per request and kept in an LRU cache.
/// Results are identical either way.
pub struct SchurOracle<'a> {
    spec: &'a KernelSpec,
    ps: &'a PointSet,
    landmark_ids: &'a [usize],
    rest_ids: &'a [usize],
    chol: &'a CholeskyFactor,
    storage: VStorage,
}

impl<'a> SchurOracle<'a> {
    pub fn new(
        spec: &'a KernelSpec,
        ps: &'a PointSet,
        landmark_ids: &'a [usize],
        rest_ids: &'a [usize],
        chol: &'a CholeskyFactor,
        memory_budget_bytes: usize,
        lazy_cache_columns: usize,
    ) -> Result<Self> {
        let k = landmark_ids.len();
        let m = rest_ids.len();
        let storage = if k.saturating_mul(m).saturating_mul(8) <= memory_budget_bytes {
            // K21 rows are the columns of K12
            let k21 = assemble_block(spec, ps, rest_ids, landmark_ids)?;
            VStorage::Full(forward_solve_rows(chol, &k21.values))
        } else {
            VStorage::Lazy {
                cache: Mutex::new(LruColumns {
                    map: HashMap::new(),
                    order: VecDeque::new(),
                }),
                capacity: lazy_cache_columns.max(1),
            }
        };
        Ok(SchurOracle {
            spec,
            ps,
            landmark_ids,
            rest_ids,
            chol,
            storage,
        })
    }

    /// Forces the lazy per-column path regardless of budget (tests).
    pub fn new_lazy(
        spec: &'a KernelSpec,
        ps: &'a PointSet,
        landmark_ids: &'a [usize],
        rest_ids: &'a [usize],
        chol: &'a CholeskyFactor,
        lazy_cache_columns: usize,
    ) -> Self {
        SchurOracle {
            spec,
            ps,
            landmark_ids,
            rest_ids,
            chol,
            storage: VStorage::Lazy {
                cache: Mutex::new(LruColumns {
                    map: HashMap::new(),
                    order: VecDeque::new(),
                }),
                capacity: lazy_cache_columns.max(1),
            },
        }
    }

    fn compute_column(&self, a: usize) -> Vec<f64> {
        let xa = self.ps.point(self.rest_ids[a]);
        let rhs: Vec<f64> = self
            .landmark_ids
            .iter()
            .map(|&l| self.spec.eval_sq_dist(sq_dist(self.ps.point(l), xa)))
            .collect();
        tri_solve(self.chol, &rhs, TriMode::Lower)
    }

    /// `V` columns for `idx`, in order, as rows of the returned matrix.
    fn columns(&self, idx: &[usize]) -> Mat {
        match &self.storage {
            VStorage::Full(vt) => {
                let k = vt.ncols();
                let mut out = Mat::zeros(idx.len(), k);
                for (i, &a) in idx.iter().enumerate() {
                    out.row_mut(i).copy_from_slice(vt.row(a));
                }
                out
            }
            VStorage::Lazy { cache, capacity } => {
                let mut guard = cache.lock().unwrap();
                let k = self.landmark_ids.len();
                let mut out = Mat::zeros(idx.len(), k);
                for (i, &a) in idx.iter().enumerate() {
                    if let Some(pos) = guard.order.iter().position(|&x| x == a) {
                        // hit: refresh recency
                        guard.order.remove(pos);
                        guard.order.push_back(a);
                    } else {
                        let col = self.compute_column(a);
                        guard.map.insert(a, col);
                        guard.order.push_back(a);
                        let cap = (*capacity).max(idx.len());
                        while guard.map.len() > cap {
                            if let Some(old) = guard.order.pop_front() {
                                guard.map.remove(&old);
                            }
                        }
                    }
                    out.row_mut(i).copy_from_slice(&guard.map[&a]);
                }
                out
            }
        }
    }

    pub fn mu(&self) -> f64 {
        self.spec.mu()
    }
}

impl SpdOracle for SchurOracle<'_> {
    fn dim(&self) -> usize {
        self.rest_ids.len()
    }

    fn entry(&self, a: usize, b: usize) -> f64 {
        let cols = self.columns(&[a, b]);
        let kab = self.spec.eval_sq_dist(sq_dist(
            self.ps.point(self.rest_ids[a]),
            self.ps.point(self.rest_ids[b]),
        ));
        let base = if a == b { kab + self.spec.mu() } else { kab };
        base - dot(cols.row(0), cols.row(1))
    }

    fn gather(&self, idx: &[usize]) -> Mat {
        let cols = self.columns(idx);
        let mut m = Mat::zeros(idx.len(), idx.len());
        for (i, &a) in idx.iter().enumerate() {
            let xa = self.ps.point(self.rest_ids[a]);
            for (j, &b) in idx.iter().enumerate().take(i + 1) {
                let kab = self
                    .spec
                    .eval_sq_dist(sq_dist(xa, self.ps.point(self.rest_ids[b])));
                let base = if a == b { kab + self.spec.mu() } else { kab };
                let v = base - dot(cols.row(i), cols.row(j));
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// Dense regularized Schur complement over the non-landmarks of `sel`,
/// ordered landmarks-first. Diagnostic helper for figures and tests.
pub fn schur_complement_dense(
    spec: &KernelSpec,
    ps: &PointSet,
    landmark_ids: &[usize],
) -> Result<(Mat, Vec<usize>)> {
    let in_sel = {
        let mut mask = vec![false; ps.len()];
        for &i in landmark_ids {
            mask[i] = true;
        }
        mask
    };
    let rest: Vec<usize> = (0..ps.len()).filter(|&i| !in_sel[i]).collect();
    let k11 = assemble_block(spec, ps, landmark_ids, landmark_ids)?;
    let mut a11 = k11.values;
    a11.add_diagonal(spec.mu());
    let chol = crate::linalg::dense::cholesky(&a11, &crate::linalg::JitterPolicy::default())?;
    let oracle = SchurOracle::new(
        spec,
        ps,
        landmark_ids,
        &rest,
        &chol,
        DEFAULT_MEMORY_BUDGET,
        1,
    )?;
    let all: Vec<usize> = (0..rest.len()).collect();
    Ok((oracle.gather(&all), rest))
}
