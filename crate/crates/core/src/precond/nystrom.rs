//! Nystrom preconditioners: `K ~ U diag(w) U'` built from a landmark
//! selection (FPS or uniform random), the closed-form inverse apply, and
//! spectral-norm diagnostics for the approximation error.

use crate::error::{Error, Result};
use crate::geometry::{LandmarkSelection, PointSet, SelectionMethod};
use crate::kernel::{assemble_block, assemble_full, KernelSpec};
use crate::linalg::dense::{
    cholesky, forward_solve_rows, qr_thin, sym_eig, tri_solve, CholeskyFactor, JitterPolicy,
    TriMode, DENSE_EIG_LIMIT,
};
use crate::linalg::pcg::{power_iteration, spectral_norm, FnOp, LinearOp};
use crate::mat::{dot, Mat};

/// Rank-k Nystrom approximation of `K` in eigenform, ready to act as a
/// preconditioner for `K + mu I`.
#[derive(Clone, Debug)]
pub struct NystromPreconditioner {
    u: Mat,
    eigenvalues: Vec<f64>,
    mu: f64,
    lambda_k: f64,
    landmark_method: SelectionMethod,
    scaled_apply: bool,
}

impl NystromPreconditioner {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_k(&self) -> f64 {
        self.lambda_k
    }

    pub fn landmark_method(&self) -> SelectionMethod {
        self.landmark_method
    }

    pub fn basis(&self) -> &Mat {
        &self.u
    }

    /// Chooses between the `(lambda_k + mu)`-scaled inverse form (default)
    /// and the unscaled `1/mu` projector form.
    pub fn set_scaled_apply(&mut self, scaled: bool) {
        self.scaled_apply = scaled;
    }

    pub fn scaled_apply(&self) -> bool {
        self.scaled_apply
    }
}

/// Builds the Nystrom approximation from the landmark columns:
/// `B = K(X, X_k) chol(K11 + eps)^{-T}`, thin QR of `B`, then the
/// eigendecomposition of `R R'` gives `U` (orthonormal) and the eigenvalues
/// (squared singular values of `B`). `lambda_k` is the smallest kept one.
pub fn build_nystrom(
    spec: &KernelSpec,
    ps: &PointSet,
    sel: &LandmarkSelection,
) -> Result<NystromPreconditioner> {
    let k = sel.k();
    if k == 0 {
        return Err(Error::InvalidArgument("empty landmark selection".into()));
    }
    if k > DENSE_EIG_LIMIT {
        return Err(Error::TooLarge(format!(
            "Nystrom rank {k} exceeds the dense eigendecomposition limit {DENSE_EIG_LIMIT}"
        )));
    }
    let all: Vec<usize> = (0..ps.len()).collect();
    let c = assemble_block(spec, ps, &all, &sel.indices)?;
    let w = assemble_block(spec, ps, &sel.indices, &sel.indices)?;
    let chol_w = cholesky(&w.values, &JitterPolicy::default())?;

    // rows of B solve L_W b_i = c_i
    let b = forward_solve_rows(&chol_w, &c.values);
    let (q, r) = qr_thin(&b);
    let rt = r.transpose();
    let rrt = r.matmul(&rt);
    let (mut eigenvalues, v) = sym_eig(&rrt)?;
    for e in eigenvalues.iter_mut() {
        if *e < 0.0 {
            *e = 0.0;
        }
    }
    let u = q.matmul(&v);
    let lambda_k = eigenvalues[k - 1];

    Ok(NystromPreconditioner {
        u,
        eigenvalues,
        mu: spec.mu(),
        lambda_k,
        landmark_method: sel.method,
        scaled_apply: true,
    })
}

/// Closed-form inverse apply.
///
/// Scaled form: `(lambda_k + mu) U (W + mu I)^{-1} U' r + (r - U U' r)`.
/// Unscaled form: `U (W + mu I)^{-1} U' r + (r - U U' r) / mu`.
pub fn apply_nystrom_inv(p: &NystromPreconditioner, r: &[f64]) -> Vec<f64> {
    assert_eq!(r.len(), p.dim(), "apply_nystrom_inv: dimension mismatch");
    let t = p.u.matvec_t(r);
    let weighted: Vec<f64> = t
        .iter()
        .zip(&p.eigenvalues)
        .map(|(ti, wi)| ti / (wi + p.mu))
        .collect();
    let core = p.u.matvec(&weighted);
    let proj = p.u.matvec(&t);
    let n = r.len();
    let mut out = vec![0.0; n];
    if p.scaled_apply {
        let s = p.lambda_k + p.mu;
        for i in 0..n {
            out[i] = s * core[i] + (r[i] - proj[i]);
        }
    } else {
        for i in 0..n {
            out[i] = core[i] + (r[i] - proj[i]) / p.mu;
        }
    }
    out
}

/// [`LinearOp`] adapter for the inverse apply.
pub struct NystromInverseOp<'a>(pub &'a NystromPreconditioner);

impl LinearOp for NystromInverseOp<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&apply_nystrom_inv(self.0, x));
    }
}

/// Spectral norm of `K - K_nys` for a landmark selection (power iteration,
/// relative tolerance 1e-6). Dense-feasible sizes only.
pub fn nystrom_error(spec: &KernelSpec, ps: &PointSet, sel: &LandmarkSelection) -> Result<f64> {
    let k_full = assemble_full(spec, ps);
    let parts = residual_parts(spec, ps, &sel.indices)?;
    Ok(residual_norm(&k_full, &parts, None).0)
}

/// `||K - K_nys|| / ||K||`.
pub fn nystrom_error_rel(spec: &KernelSpec, ps: &PointSet, sel: &LandmarkSelection) -> Result<f64> {
    let k_full = assemble_full(spec, ps);
    let knorm = spectral_norm(&k_full);
    let parts = residual_parts(spec, ps, &sel.indices)?;
    if knorm == 0.0 {
        return Ok(0.0);
    }
    Ok(residual_norm(&k_full, &parts, None).0 / knorm)
}

struct ResidualParts {
    c: Mat,
    chol_w: CholeskyFactor,
}

fn residual_parts(spec: &KernelSpec, ps: &PointSet, landmarks: &[usize]) -> Result<ResidualParts> {
    let all: Vec<usize> = (0..ps.len()).collect();
    let c = assemble_block(spec, ps, &all, landmarks)?;
    let w = assemble_block(spec, ps, landmarks, landmarks)?;
    let chol_w = cholesky(&w.values, &JitterPolicy::default())?;
    Ok(ResidualParts {
        c: c.values,
        chol_w,
    })
}

/// Power iteration on `v -> K v - C W^{-1} C' v`; returns the norm estimate
/// and the converged iterate for warm starts.
fn residual_norm(k_full: &Mat, parts: &ResidualParts, warm: Option<Vec<f64>>) -> (f64, Vec<f64>) {
    let n = k_full.nrows();
    let op = FnOp::new(n, |x: &[f64], y: &mut [f64]| {
        let ctx = parts.c.matvec_t(x);
        let winv = tri_solve(
            &parts.chol_w,
            &tri_solve(&parts.chol_w, &ctx, TriMode::Lower),
            TriMode::Upper,
        );
        let nys = parts.c.matvec(&winv);
        let kv = k_full.matvec(x);
        for i in 0..y.len() {
            y[i] = kv[i] - nys[i];
        }
    });
    let (lambda, v) = power_iteration(&op, warm, 1e-6, 500);
    (lambda.abs(), v)
}

/// Relative Nystrom error over nested prefixes of a landmark ordering.
///
/// For each requested rank `r` (ascending), the prefix Cholesky of the
/// landmark kernel block grows by appended rows, and the power iteration is
/// warm-started from the previous rank. Stops early once the error falls
/// below `stop_below`, when given.
pub fn nystrom_error_curve(
    spec: &KernelSpec,
    ps: &PointSet,
    order: &[usize],
    ranks: &[usize],
    stop_below: Option<f64>,
) -> Result<Vec<(usize, f64)>> {
    if order.is_empty() {
        return Err(Error::InvalidArgument("empty landmark ordering".into()));
    }
    if ranks.iter().any(|&r| r == 0 || r > order.len()) {
        return Err(Error::InvalidArgument(
            "curve ranks must lie in 1..=order.len()".into(),
        ));
    }
    if !ranks.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "curve ranks must be strictly increasing".into(),
        ));
    }

    let n = ps.len();
    let k_full = assemble_full(spec, ps);
    let knorm = spectral_norm(&k_full);
    if knorm == 0.0 {
        return Ok(ranks.iter().map(|&r| (r, 0.0)).collect());
    }

    // Incremental Cholesky of the landmark prefix kernel matrix. A pivot
    // that loses definiteness in floating point is floored relative to the
    // diagonal so the solves stay bounded.
    let rmax = *ranks.last().unwrap();
    let mut l = Mat::zeros(rmax, rmax);
    let mut built = 0usize;
    let mut c_cols: Mat = {
        let all: Vec<usize> = (0..n).collect();
        assemble_block(spec, ps, &all, &order[..rmax])?.values
    };
    // column-major access below; transpose once
    c_cols = c_cols.transpose(); // rmax x n, row j = K(x_{order[j]}, X)

    let mut out = Vec::with_capacity(ranks.len());
    let mut warm: Option<Vec<f64>> = None;
    for &r in ranks {
        while built < r {
            let j = built;
            let new_id = order[j];
            // row j of L: solve L[0..j,0..j] y = W[j, 0..j]
            for i in 0..j {
                let wji = spec.eval_sq_dist(crate::geometry::sq_dist(
                    ps.point(new_id),
                    ps.point(order[i]),
                ));
                let s = dot(&l.row(j)[..i], &l.row(i)[..i]);
                l[(j, i)] = (wji - s) / l[(i, i)];
            }
            let wjj = spec.eval_sq_dist(0.0);
            let s = dot(&l.row(j)[..j], &l.row(j)[..j]);
            let floor = 1e-14 * wjj.abs().max(f64::MIN_POSITIVE);
            l[(j, j)] = (wjj - s).max(floor).sqrt();
            built += 1;
        }

        // residual operator for the rank-r prefix
        let op = FnOp::new(n, |x: &[f64], y: &mut [f64]| {
            // t = C' x (length r)
            let mut t = vec![0.0; r];
            for (j, tj) in t.iter_mut().enumerate() {
                *tj = dot(&c_cols.row(j)[..n], x);
            }
            // forward/back solve with the r x r prefix of L
            let mut fwd = vec![0.0; r];
            for i in 0..r {
                let s = dot(&l.row(i)[..i], &fwd[..i]);
                fwd[i] = (t[i] - s) / l[(i, i)];
            }
            let mut bwd = fwd;
            for jj in (0..r).rev() {
                bwd[jj] /= l[(jj, jj)];
                let xj = bwd[jj];
                let row = &l.row(jj)[..jj];
                for (xi, lji) in bwd[..jj].iter_mut().zip(row) {
                    *xi -= lji * xj;
                }
            }
            // y = K x - C bwd
            let kv = k_full.matvec(x);
            y.copy_from_slice(&kv);
            for (j, bj) in bwd.iter().enumerate() {
                if *bj != 0.0 {
                    for (yi, cij) in y.iter_mut().zip(c_cols.row(j)) {
                        *yi -= bj * cij;
                    }
                }
            }
        });
        let (lambda, v) = power_iteration(&op, warm.take(), 1e-6, 500);
        warm = Some(v);
        let rel = lambda.abs() / knorm;
        out.push((r, rel));
        if let Some(thresh) = stop_below {
            if rel < thresh {
                break;
            }
        }
    }
    Ok(out)
}
