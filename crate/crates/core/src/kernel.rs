//! Kernel evaluation, dense block assembly for arbitrary index subsets, and
//! blocked matrix-vector products that never materialize the full matrix.
//!
//! Regularization is carried in [`KernelSpec`] but never added here: callers
//! add `mu * I` where their formulation requires it, and never to
//! off-diagonal blocks.

use crate::error::{Error, Result};
use crate::geometry::{sq_dist, PointSet};
use crate::mat::{dot, Mat};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelFamily {
    Gaussian,
    Matern32,
    InverseMultiquadric,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::InverseMultiquadric => "imq",
        }
    }
}

/// Kernel family, its parameters, and the system regularization `mu`.
///
/// The Gaussian kernel is `exp(-||x-y||^2 / l^2)` (no factor 2 in the
/// exponent); Matern-3/2 is `(1 + sqrt(3) r / l) exp(-sqrt(3) r / l)`; the
/// inverse multiquadric is `(c^2 + r^2)^(-p/2)` and does not use `l`.
#[derive(Clone, Copy, Debug)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub length_scale: f64,
    pub imq_c: f64,
    pub imq_p: f64,
    pub regularization: f64,
}

impl KernelSpec {
    pub fn gaussian(length_scale: f64, regularization: f64) -> Result<Self> {
        KernelSpec {
            family: KernelFamily::Gaussian,
            length_scale,
            imq_c: 1.0,
            imq_p: 1.0,
            regularization,
        }
        .validated()
    }

    pub fn matern32(length_scale: f64, regularization: f64) -> Result<Self> {
        KernelSpec {
            family: KernelFamily::Matern32,
            length_scale,
            imq_c: 1.0,
            imq_p: 1.0,
            regularization,
        }
        .validated()
    }

    pub fn inverse_multiquadric(c: f64, p: f64, regularization: f64) -> Result<Self> {
        KernelSpec {
            family: KernelFamily::InverseMultiquadric,
            length_scale: 1.0,
            imq_c: c,
            imq_p: p,
            regularization,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.length_scale <= 0.0 || self.length_scale.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if self.family == KernelFamily::InverseMultiquadric
            && (self.imq_p <= 0.0 || self.imq_p.is_nan())
        {
            return Err(Error::InvalidArgument(format!(
                "inverse multiquadric exponent p must be positive, got {}",
                self.imq_p
            )));
        }
        if self.regularization < 0.0 || self.regularization.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "regularization must be non-negative, got {}",
                self.regularization
            )));
        }
        Ok(self)
    }

    pub fn mu(&self) -> f64 {
        self.regularization
    }

    /// Kernel value as a function of the squared distance.
    #[inline]
    pub fn eval_sq_dist(&self, r2: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let l = self.length_scale;
                (-r2 / (l * l)).exp()
            }
            KernelFamily::Matern32 => {
                let t = 3.0f64.sqrt() * r2.sqrt() / self.length_scale;
                (1.0 + t) * (-t).exp()
            }
            KernelFamily::InverseMultiquadric => {
                (self.imq_c * self.imq_c + r2).powf(-0.5 * self.imq_p)
            }
        }
    }

    /// Human-readable instance label, used by the benchmark emitters.
    pub fn label(&self) -> String {
        match self.family {
            KernelFamily::Gaussian => format!("gaussian(l={})", self.length_scale),
            KernelFamily::Matern32 => format!("matern32(l={})", self.length_scale),
            KernelFamily::InverseMultiquadric => {
                format!("imq(c={},p={})", self.imq_c, self.imq_p)
            }
        }
    }
}

/// Dense kernel block over explicit row/column id lists.
#[derive(Clone, Debug)]
pub struct KernelBlock {
    pub row_ids: Vec<usize>,
    pub col_ids: Vec<usize>,
    pub values: Mat,
}

/// Single kernel evaluation with a dimension check.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(spec.eval_sq_dist(sq_dist(x, y)))
}

fn validate_ids(ps: &PointSet, ids: &[usize]) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::InvalidArgument("id list must be non-empty".into()));
    }
    for &i in ids {
        if i >= ps.len() {
            return Err(Error::InvalidArgument(format!("point id {i} out of range")));
        }
    }
    Ok(())
}

/// Assembles the dense block `[k(x_r, x_c)]` for the given row/column ids.
/// No regularization is added.
pub fn assemble_block(
    spec: &KernelSpec,
    ps: &PointSet,
    rows: &[usize],
    cols: &[usize],
) -> Result<KernelBlock> {
    validate_ids(ps, rows)?;
    validate_ids(ps, cols)?;
    let ncols = cols.len();
    let mut data = vec![0.0; rows.len() * ncols];
    data.par_chunks_mut(ncols).enumerate().for_each(|(i, out)| {
        let xi = ps.point(rows[i]);
        for (o, &c) in out.iter_mut().zip(cols) {
            *o = spec.eval_sq_dist(sq_dist(xi, ps.point(c)));
        }
    });
    let values = Mat::from_vec(rows.len(), ncols, data);
    Ok(KernelBlock {
        row_ids: rows.to_vec(),
        col_ids: cols.to_vec(),
        values,
    })
}

/// Full kernel matrix (no regularization).
pub fn assemble_full(spec: &KernelSpec, ps: &PointSet) -> Mat {
    let ids: Vec<usize> = (0..ps.len()).collect();
    assemble_block(spec, ps, &ids, &ids)
        .expect("full id list is valid")
        .values
}

/// `K v` computed in row blocks of `block_size` without materializing `K`.
///
/// Each output entry is a sequential sum over all columns, so the result is
/// bitwise identical for any block size or thread count.
pub fn matvec(spec: &KernelSpec, ps: &PointSet, v: &[f64], block_size: usize) -> Result<Vec<f64>> {
    if v.len() != ps.len() {
        return Err(Error::InvalidArgument(format!(
            "vector length {} does not match point count {}",
            v.len(),
            ps.len()
        )));
    }
    if block_size == 0 {
        return Err(Error::InvalidArgument("block size must be >= 1".into()));
    }
    let n = ps.len();
    let mut out = vec![0.0; n];
    out.par_chunks_mut(block_size)
        .enumerate()
        .for_each(|(b, chunk)| {
            let row0 = b * block_size;
            for (r, o) in chunk.iter_mut().enumerate() {
                let xi = ps.point(row0 + r);
                let mut acc = 0.0;
                for (j, vj) in v.iter().enumerate() {
                    acc += spec.eval_sq_dist(sq_dist(xi, ps.point(j))) * vj;
                }
                *o = acc;
            }
        });
    Ok(out)
}

/// Dense symmetric apply of `K + mu I` built once from a materialized matrix.
/// The workhorse operator for desk-scale solves.
pub struct RegularizedKernelMatrix {
    k: Mat,
    mu: f64,
}

impl RegularizedKernelMatrix {
    pub fn assemble(spec: &KernelSpec, ps: &PointSet) -> Self {
        RegularizedKernelMatrix {
            k: assemble_full(spec, ps),
            mu: spec.regularization,
        }
    }

    pub fn kernel_matrix(&self) -> &Mat {
        &self.k
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.par_chunks_mut(64).enumerate().for_each(|(b, chunk)| {
            for (r, o) in chunk.iter_mut().enumerate() {
                let i = b * 64 + r;
                *o = dot(self.k.row(i), x) + self.mu * x[i];
            }
        });
    }
}
