//! Preconditioned conjugate gradient with a true-residual stopping test,
//! plus the operator abstraction and power iteration shared by the
//! preconditioner builders.

use crate::error::{Error, Result};
use crate::mat::{axpy, dot, norm2, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::time::Instant;

/// Symmetric linear operator on `R^n`.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Adapter turning a closure into a [`LinearOp`].
pub struct FnOp<F: Fn(&[f64], &mut [f64]) + Sync> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnOp<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnOp { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> LinearOp for FnOp<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

impl LinearOp for Mat {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec(x));
    }
}

/// Default iteration cap; sweeps count a run as failed beyond this.
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
/// Default relative-residual stopping tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// Outcome of an iterative solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||b - A x_j|| / ||b||` for j = 0, 1, ...; always non-empty.
    pub rel_residual_history: Vec<f64>,
    pub converged: bool,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

impl SolveReport {
    pub fn final_relative_residual(&self) -> f64 {
        *self.rel_residual_history.last().unwrap()
    }
}

/// Conjugate gradient on `A x = b` from a zero initial guess, optionally
/// preconditioned by an SPD `m_inv` approximating `A^{-1}`.
///
/// The stopping test uses the true residual `b - A x`, recomputed every
/// iteration, not the recurrence residual.
pub fn pcg(
    a: &dyn LinearOp,
    b: &[f64],
    m_inv: Option<&dyn LinearOp>,
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "rhs length {} does not match operator dimension {}",
            b.len(),
            n
        )));
    }
    if let Some(m) = m_inv {
        if m.dim() != n {
            return Err(Error::InvalidArgument(
                "preconditioner dimension mismatch".into(),
            ));
        }
    }
    let start = Instant::now();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                rel_residual_history: vec![0.0],
                converged: true,
                setup_seconds: 0.0,
                solve_seconds: start.elapsed().as_secs_f64(),
            },
        ));
    }

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    match m_inv {
        Some(m) => m.apply(&r, &mut z),
        None => z.copy_from_slice(&r),
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    let mut work = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iterations {
        a.apply(&p, &mut work);
        let pap = dot(&p, &work);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::CgBreakdown {
                iteration: it,
                value: pap,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &work, &mut r);

        // true residual for the stopping test
        a.apply(&x, &mut work);
        let mut true_sq = 0.0;
        for (bi, axi) in b.iter().zip(&work) {
            let d = bi - axi;
            true_sq += d * d;
        }
        let relres = true_sq.sqrt() / bnorm;
        history.push(relres);
        iterations = it;
        if relres <= tol {
            converged = true;
            break;
        }

        match m_inv {
            Some(m) => m.apply(&r, &mut z),
            None => z.copy_from_slice(&r),
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    Ok((
        x,
        SolveReport {
            iterations,
            rel_residual_history: history,
            converged,
            setup_seconds: 0.0,
            solve_seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Largest eigenvalue in magnitude of a symmetric operator by power
/// iteration; returns the Rayleigh quotient and the final iterate.
pub fn power_iteration(
    op: &dyn LinearOp,
    v0: Option<Vec<f64>>,
    tol: f64,
    max_iterations: usize,
) -> (f64, Vec<f64>) {
    let n = op.dim();
    let mut v = v0.unwrap_or_else(|| {
        let mut rng = ChaCha20Rng::seed_from_u64(0x9E3779B9);
        (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()
    });
    let nrm = norm2(&v);
    if nrm == 0.0 || v.len() != n {
        let mut rng = ChaCha20Rng::seed_from_u64(0x9E3779B9);
        v = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    }
    let nrm = norm2(&v);
    for vi in v.iter_mut() {
        *vi /= nrm;
    }

    let mut av = vec![0.0; n];
    let mut lambda = 0.0f64;
    for _ in 0..max_iterations {
        op.apply(&v, &mut av);
        let new_lambda = dot(&v, &av);
        let av_norm = norm2(&av);
        if av_norm == 0.0 {
            return (0.0, v);
        }
        for (vi, avi) in v.iter_mut().zip(&av) {
            *vi = avi / av_norm;
        }
        if (new_lambda - lambda).abs() <= tol * new_lambda.abs().max(f64::MIN_POSITIVE) {
            return (new_lambda, v);
        }
        lambda = new_lambda;
    }
    (lambda, v)
}

/// Spectral norm of a symmetric operator (power iteration, relative
/// tolerance 1e-6).
pub fn spectral_norm(op: &dyn LinearOp) -> f64 {
    power_iteration(op, None, 1e-6, 500).0.abs()
}
