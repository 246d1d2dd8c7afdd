//! Dense symmetric kernels: Cholesky with an escalating-jitter policy,
//! triangular solves, thin Householder QR, and a symmetric eigensolver
//! (Householder tridiagonalization + implicit QL).

use crate::error::{Error, Result};
use crate::mat::{axpy, dot, norm2, scale, Mat};
use rayon::prelude::*;

/// Jitter escalation for Cholesky breakdowns: first attempt is unjittered,
/// then `base_scale * trace(A)/k` growing by 10x per retry.
#[derive(Clone, Copy, Debug)]
pub struct JitterPolicy {
    pub base_scale: f64,
    pub max_escalations: usize,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy {
            base_scale: 1e-14,
            max_escalations: 6,
        }
    }
}

/// Lower-triangular Cholesky factor, with the diagonal shift that was needed
/// to obtain it.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: Mat,
    jitter_applied: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn l(&self) -> &Mat {
        &self.l
    }

    pub fn jitter(&self) -> f64 {
        self.jitter_applied
    }
}

/// Factors `A + jitter*I = L L'` after symmetrizing `A`. Jitter starts at
/// zero and escalates per [`JitterPolicy`] on breakdown.
pub fn cholesky(a: &Mat, policy: &JitterPolicy) -> Result<CholeskyFactor> {
    assert_eq!(a.nrows(), a.ncols(), "cholesky: matrix must be square");
    let mut sym = a.clone();
    sym.symmetrize();
    let k = sym.nrows();
    let trace = sym.trace();
    let base = if trace > 0.0 {
        policy.base_scale * trace / k as f64
    } else {
        policy.base_scale
    };

    let mut jitter = 0.0;
    let mut last_failure = (0usize, 0.0f64);
    for attempt in 0..=policy.max_escalations {
        match try_cholesky(&sym, jitter) {
            Ok(l) => {
                return Ok(CholeskyFactor {
                    l,
                    jitter_applied: jitter,
                })
            }
            Err(fail) => last_failure = fail,
        }
        jitter = if attempt == 0 { base } else { jitter * 10.0 };
    }
    Err(Error::CholeskyBreakdown {
        index: last_failure.0,
        value: last_failure.1,
        attempts: policy.max_escalations + 1,
    })
}

fn try_cholesky(a: &Mat, jitter: f64) -> std::result::Result<Mat, (usize, f64)> {
    let n = a.nrows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let s = dot(&l.row(i)[..j], &l.row(j)[..j]);
            let ljj = l[(j, j)];
            l[(i, j)] = (a[(i, j)] - s) / ljj;
        }
        let s = dot(&l.row(i)[..i], &l.row(i)[..i]);
        let diag = a[(i, i)] + jitter - s;
        if diag <= 0.0 || !diag.is_finite() {
            return Err((i, diag));
        }
        l[(i, i)] = diag.sqrt();
    }
    Ok(l)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriMode {
    /// Solve `L x = b` by forward substitution.
    Lower,
    /// Solve `L' x = b` by back substitution.
    Upper,
}

/// Exact forward/back substitution with the stored factor.
pub fn tri_solve(chol: &CholeskyFactor, b: &[f64], mode: TriMode) -> Vec<f64> {
    match mode {
        TriMode::Lower => forward_solve(chol.l(), b),
        TriMode::Upper => backward_solve_t(chol.l(), b),
    }
}

fn forward_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    let mut x = vec![0.0; n];
    for i in 0..n {
        let s = dot(&l.row(i)[..i], &x[..i]);
        x[i] = (b[i] - s) / l[(i, i)];
    }
    x
}

/// Solves `L' x = b` using row-wise access to `L`.
fn backward_solve_t(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    debug_assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for j in (0..n).rev() {
        x[j] /= l[(j, j)];
        let xj = x[j];
        let row = &l.row(j)[..j];
        for (xi, lji) in x[..j].iter_mut().zip(row) {
            *xi -= lji * xj;
        }
    }
    x
}

/// `(L L')^{-1} b`.
pub fn spd_solve(chol: &CholeskyFactor, b: &[f64]) -> Vec<f64> {
    backward_solve_t(chol.l(), &forward_solve(chol.l(), b))
}

/// Forward-solves every row of `bt` independently: row `i` of the result is
/// `L^{-1} bt[i, :]`. Rows run in parallel.
pub fn forward_solve_rows(chol: &CholeskyFactor, bt: &Mat) -> Mat {
    assert_eq!(bt.ncols(), chol.dim());
    let n = bt.ncols();
    let mut data = vec![0.0; bt.nrows() * n];
    data.par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, out)| out.copy_from_slice(&forward_solve(chol.l(), bt.row(i))));
    Mat::from_vec(bt.nrows(), n, data)
}

/// Guard for the dense eigensolver; the adaptive strategy exists to avoid
/// eigendecompositions beyond this size.
pub const DENSE_EIG_LIMIT: usize = 4000;

/// Full symmetric eigendecomposition `A = U diag(w) U'`, eigenvalues sorted
/// descending, eigenvectors as columns of `U`.
pub fn sym_eig(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    let (w, u) = sym_eig_impl(a, true)?;
    Ok((w, u.expect("vectors requested")))
}

/// Eigenvalues only (descending); roughly 3x cheaper than [`sym_eig`].
pub fn sym_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    Ok(sym_eig_impl(a, false)?.0)
}

fn sym_eig_impl(a: &Mat, want_vectors: bool) -> Result<(Vec<f64>, Option<Mat>)> {
    assert_eq!(a.nrows(), a.ncols(), "sym_eig: matrix must be square");
    let n = a.nrows();
    if n > DENSE_EIG_LIMIT {
        return Err(Error::TooLarge(format!(
            "dense eigendecomposition limited to {DENSE_EIG_LIMIT}, got {n}"
        )));
    }
    let mut sym = a.clone();
    sym.symmetrize();

    let (mut d, mut e, q) = householder_tridiag(&sym, want_vectors);
    let mut v = q;
    tql_implicit(&mut d, &mut e, v.as_mut())?;

    // sort descending, ties by original position
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = v.map(|v| {
        let mut u = Mat::zeros(n, n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                u[(r, new_col)] = v[(r, old_col)];
            }
        }
        u
    });
    Ok((sorted, vectors))
}

/// Householder reduction to tridiagonal form. Returns the diagonal `d`, the
/// subdiagonal `e` (length `n`, `e[i] = T[i+1, i]`, `e[n-1] = 0`), and the
/// accumulated orthogonal `Q` with `A = Q T Q'` when requested.
fn householder_tridiag(a: &Mat, want_q: bool) -> (Vec<f64>, Vec<f64>, Option<Mat>) {
    let n = a.nrows();
    let mut w = a.clone();
    let mut e = vec![0.0; n];
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<f64> = (k + 1..n).map(|i| w[(i, k)]).collect();
        let xnorm = norm2(&x);
        if xnorm == 0.0 {
            e[k] = 0.0;
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = norm2(&v);
        if vnorm == 0.0 {
            // column already in tridiagonal shape
            e[k] = alpha;
            reflectors.push(Vec::new());
            continue;
        }
        scale(&mut v, 1.0 / vnorm);

        // trailing-block update A2 <- A2 - v q' - q v' with
        // q = 2 A2 v - 2 (v' A2 v) v
        let mut p = vec![0.0; m];
        for (i, pi) in p.iter_mut().enumerate() {
            *pi = dot(&w.row(k + 1 + i)[k + 1..n], &v);
        }
        let gamma = dot(&v, &p);
        let q: Vec<f64> = p
            .iter()
            .zip(&v)
            .map(|(pi, vi)| 2.0 * pi - 2.0 * gamma * vi)
            .collect();
        for i in 0..m {
            let (vi, qi) = (v[i], q[i]);
            let row = &mut w.row_mut(k + 1 + i)[k + 1..n];
            for ((rj, vj), qj) in row.iter_mut().zip(&v).zip(&q) {
                *rj -= vi * qj + qi * vj;
            }
        }
        w[(k + 1, k)] = alpha;
        w[(k, k + 1)] = alpha;
        for i in k + 2..n {
            w[(i, k)] = 0.0;
            w[(k, i)] = 0.0;
        }
        e[k] = alpha;
        reflectors.push(v);
    }
    if n >= 2 {
        e[n - 2] = w[(n - 1, n - 2)];
    }
    let d: Vec<f64> = (0..n).map(|i| w[(i, i)]).collect();

    let q = want_q.then(|| {
        let mut q = Mat::identity(n);
        for (k, v) in reflectors.iter().enumerate().rev() {
            if v.is_empty() {
                continue;
            }
            let m = n - k - 1;
            let mut t = vec![0.0; n];
            for (i, vi) in v.iter().enumerate().take(m) {
                axpy(*vi, q.row(k + 1 + i), &mut t);
            }
            for (i, vi) in v.iter().enumerate().take(m) {
                let coef = 2.0 * vi;
                for (rj, tj) in q.row_mut(k + 1 + i).iter_mut().zip(&t) {
                    *rj -= coef * tj;
                }
            }
        }
        q
    });

    (d, e, q)
}

/// Implicit QL with shifts on a symmetric tridiagonal matrix; accumulates
/// the rotations into `v` (columns) when provided.
fn tql_implicit(d: &mut [f64], e: &mut [f64], mut v: Option<&mut Mat>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::EigNoConvergence { index: l });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let gi = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * gi;
                    d[i + 1] = h + s * (c * gi + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..v.nrows() {
                            let hk = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * hk;
                            v[(k, i)] = c * v[(k, i)] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Thin Householder QR of a tall matrix: `B = Q R` with `Q` n-by-k
/// orthonormal and `R` k-by-k upper triangular.
pub fn qr_thin(b: &Mat) -> (Mat, Mat) {
    let n = b.nrows();
    let k = b.ncols();
    assert!(n >= k, "qr_thin: needs nrows >= ncols");

    // column-major workspace
    let mut cols: Vec<Vec<f64>> = (0..k)
        .map(|j| (0..n).map(|i| b[(i, j)]).collect())
        .collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = Mat::zeros(k, k);

    for j in 0..k {
        let (head, tail) = cols.split_at_mut(j + 1);
        let col = &mut head[j];
        let xnorm = norm2(&col[j..]);
        let mut v = vec![0.0; n - j];
        if xnorm > 0.0 {
            let alpha = if col[j] >= 0.0 { -xnorm } else { xnorm };
            v.copy_from_slice(&col[j..]);
            v[0] -= alpha;
            let vnorm = norm2(&v);
            if vnorm > 0.0 {
                scale(&mut v, 1.0 / vnorm);
                // apply to the pivot column
                let t = 2.0 * dot(&v, &col[j..]);
                for (ci, vi) in col[j..].iter_mut().zip(&v) {
                    *ci -= t * vi;
                }
                // and to the trailing columns
                for c in tail.iter_mut() {
                    let t = 2.0 * dot(&v, &c[j..]);
                    for (ci, vi) in c[j..].iter_mut().zip(&v) {
                        *ci -= t * vi;
                    }
                }
            } else {
                v = Vec::new();
            }
        } else {
            v = Vec::new();
        }
        reflectors.push(v);
        for i in 0..=j {
            r[(i, j)] = cols[j][i];
        }
    }

    // thin Q: apply reflectors in reverse to the first k identity columns
    let mut qcols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    qcols.par_iter_mut().for_each(|c| {
        for (j, v) in reflectors.iter().enumerate().rev() {
            if v.is_empty() {
                continue;
            }
            let t = 2.0 * dot(v, &c[j..]);
            for (ci, vi) in c[j..].iter_mut().zip(v) {
                *ci -= t * vi;
            }
        }
    });
    let mut q = Mat::zeros(n, k);
    for (j, c) in qcols.iter().enumerate() {
        for i in 0..n {
            q[(i, j)] = c[i];
        }
    }
    (q, r)
}
