//! Rank estimation by subsampling and the preconditioner-selection strategy.
//!
//! A subsample of `m` points is rescaled by `(m/n)^(1/d)` so its kernel
//! matrix decays like the full one; the smallest FPS-Nystrom rank `r` whose
//! relative error drops below 0.1 extrapolates to `k = r n / m`. Small
//! estimates are refined by counting subsample eigenvalues above 0.1, and
//! the estimate picks AFN above the threshold rank or plain Nystrom below
//! it.

use crate::error::{Error, Result};
use crate::geometry::{fps_sample, PointSet};
use crate::kernel::{assemble_full, KernelSpec};
use crate::linalg::dense::sym_eigenvalues;
use crate::precond::nystrom::nystrom_error_curve;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Estimated ranks at or above this use AFN; below it, plain Nystrom. Also
/// the refinement threshold of the rank estimator.
pub const RANK_THRESHOLD: usize = 2000;

/// Relative Nystrom error defining the target rank.
pub const RANK_ERROR_TOLERANCE: f64 = 0.1;

/// Eigenvalue cutoff for the refined small-rank count.
pub const EIGENVALUE_THRESHOLD: f64 = 0.1;

/// Subsample size default: `max(100, n/100)` capped at 500 (and at `n`).
pub fn default_subsample_size(n: usize) -> usize {
    (n / 100).clamp(100, 500).min(n)
}

/// Output of the rank estimator.
#[derive(Clone, Debug)]
pub struct RankEstimate {
    pub k_hat: usize,
    /// Crossing rank on the subsample.
    pub r_subsample: usize,
    pub m: usize,
    /// True when the small-rank eigencount branch produced `k_hat`.
    pub refined: bool,
    /// `(rank, relative error)` pairs evaluated on the scaled subsample, in
    /// rank order up to the crossing rank.
    pub error_curve: Vec<(usize, f64)>,
}

/// Estimates the Nystrom rank of the kernel matrix by subsampling.
///
/// Steps: draw `m` ids uniformly (deterministic per seed), scale the
/// subsample coordinates by `(m/n)^(1/d)`, run FPS, and walk the relative
/// Nystrom error curve until it crosses [`RANK_ERROR_TOLERANCE`]; the
/// estimate is `round(r n / m)`. Estimates below [`RANK_THRESHOLD`] are
/// recomputed as the number of eigenvalues of the unscaled subsample matrix
/// above [`EIGENVALUE_THRESHOLD`]. If the tolerance is never reached the
/// estimate is `n` with `r = m`.
pub fn estimate_rank(
    spec: &KernelSpec,
    ps: &PointSet,
    m: usize,
    rng_seed: u64,
) -> Result<RankEstimate> {
    let n = ps.len();
    if m < 2 || m > n {
        return Err(Error::InvalidArgument(format!(
            "subsample size m = {m} must satisfy 2 <= m <= n = {n}"
        )));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let mut ids = rand::seq::index::sample(&mut rng, n, m).into_vec();
    ids.sort_unstable();
    let sub = ps.subset(&ids)?;
    let factor = (m as f64 / n as f64).powf(1.0 / ps.dim() as f64);
    let scaled = sub.scaled(factor)?;

    let sel = fps_sample(&scaled, m, scaled.centroid_seed())?;
    let ranks: Vec<usize> = (1..=m).collect();
    let curve = nystrom_error_curve(
        spec,
        &scaled,
        &sel.indices,
        &ranks,
        Some(RANK_ERROR_TOLERANCE),
    )?;

    let crossing = curve
        .iter()
        .find(|&&(_, e)| e < RANK_ERROR_TOLERANCE)
        .map(|&(r, _)| r);

    let Some(r) = crossing else {
        return Ok(RankEstimate {
            k_hat: n,
            r_subsample: m,
            m,
            refined: false,
            error_curve: curve,
        });
    };

    let k_coarse = ((r * n) as f64 / m as f64).round() as usize;
    if k_coarse >= RANK_THRESHOLD {
        return Ok(RankEstimate {
            k_hat: k_coarse,
            r_subsample: r,
            m,
            refined: false,
            error_curve: curve,
        });
    }

    // refined branch: eigenvalue count of the unscaled subsample matrix
    let km = assemble_full(spec, &sub);
    let evals = sym_eigenvalues(&km)?;
    let count = evals.iter().filter(|&&v| v > EIGENVALUE_THRESHOLD).count();
    Ok(RankEstimate {
        k_hat: count.max(1),
        r_subsample: r,
        m,
        refined: true,
        error_curve: curve,
    })
}

/// Which preconditioner the strategy picked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrecondKind {
    Afn,
    Nystrom,
}

#[derive(Clone, Debug)]
pub struct StrategyChoice {
    pub chosen: PrecondKind,
    /// Landmark count the chosen preconditioner should be built with.
    pub k_used: usize,
    pub estimate: RankEstimate,
    pub threshold: usize,
}

/// Tunables for [`choose_preconditioner`]; defaults match the benchmarks.
#[derive(Clone, Copy, Debug)]
pub struct StrategyOverrides {
    pub threshold: usize,
    pub afn_landmark_cap: usize,
}

impl Default for StrategyOverrides {
    fn default() -> Self {
        StrategyOverrides {
            threshold: RANK_THRESHOLD,
            afn_landmark_cap: crate::precond::afn::DEFAULT_LANDMARK_CAP,
        }
    }
}

/// Pure decision rule: AFN exactly when `k_hat >= threshold`, with the AFN
/// landmark count capped; plain Nystrom with `k_hat` landmarks otherwise.
pub fn decide(estimate: RankEstimate, overrides: &StrategyOverrides, n: usize) -> StrategyChoice {
    let k_hat = estimate.k_hat;
    if k_hat >= overrides.threshold {
        let k_used = k_hat
            .min(overrides.afn_landmark_cap)
            .min(n.saturating_sub(1))
            .max(1);
        StrategyChoice {
            chosen: PrecondKind::Afn,
            k_used,
            estimate,
            threshold: overrides.threshold,
        }
    } else {
        StrategyChoice {
            chosen: PrecondKind::Nystrom,
            k_used: k_hat.min(n).max(1),
            estimate,
            threshold: overrides.threshold,
        }
    }
}

/// Runs the rank estimator and applies the decision rule.
pub fn choose_preconditioner(
    spec: &KernelSpec,
    ps: &PointSet,
    m: usize,
    rng_seed: u64,
    overrides: &StrategyOverrides,
) -> Result<StrategyChoice> {
    let estimate = estimate_rank(spec, ps, m, rng_seed)?;
    Ok(decide(estimate, overrides, ps.len()))
}
