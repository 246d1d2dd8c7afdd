//! Plot-ready CSV emission for the benchmark figures: regularized spectra,
//! fill distance vs Nystrom error, entry-magnitude histograms of the Schur
//! complement, and the subsample/full error-curve match.

use crate::error::{BenchError, Result};
use afn_precond::geometry::{fps_sample, uniform_sample, PointSet};
use afn_precond::kernel::{assemble_block, assemble_full, KernelSpec};
use afn_precond::linalg::{cholesky, spd_solve, sym_eigenvalues, JitterPolicy};
use afn_precond::mat::Mat;
use afn_precond::precond::{nystrom_error_curve, schur_complement_dense};
use std::fs;
use std::path::Path;

/// Tabular figure data; every cell already stringified.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl FigureData {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

const DENSE_FIGURE_LIMIT: usize = 4000;

fn guard_dense(n: usize) -> Result<()> {
    if n > DENSE_FIGURE_LIMIT {
        return Err(BenchError::Config(format!(
            "figure needs dense eigendecompositions; n = {n} exceeds {DENSE_FIGURE_LIMIT}"
        )));
    }
    Ok(())
}

/// Sorted spectra of `K + mu I` for each parameterized kernel; one series
/// column per grid value.
pub fn spectrum(specs: &[(String, KernelSpec)], ps: &PointSet) -> Result<FigureData> {
    guard_dense(ps.len())?;
    if specs.is_empty() {
        return Err(BenchError::Config(
            "spectrum needs at least one kernel".into(),
        ));
    }
    let mut header = vec!["index".to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (label, spec) in specs {
        header.push(label.clone());
        let k = assemble_full(spec, ps);
        let mut evals = sym_eigenvalues(&k)?;
        for e in evals.iter_mut() {
            *e += spec.mu();
        }
        columns.push(evals);
    }
    let rows = (0..ps.len())
        .map(|i| {
            let mut row = vec![(i + 1).to_string()];
            row.extend(columns.iter().map(|c| format!("{}", c[i])));
            row
        })
        .collect();
    Ok(FigureData { header, rows })
}

/// Fill distance and relative Nystrom error over a rank grid, for FPS and
/// uniform random landmark orderings.
pub fn fill_vs_error(
    spec: &KernelSpec,
    ps: &PointSet,
    ks: &[usize],
    seed: u64,
) -> Result<FigureData> {
    guard_dense(ps.len())?;
    if ks.is_empty() || !ks.windows(2).all(|w| w[0] < w[1]) {
        return Err(BenchError::Config(
            "fill_vs_error needs a strictly increasing rank list".into(),
        ));
    }
    let k_max = *ks.last().unwrap();
    let fps = fps_sample(ps, k_max, ps.centroid_seed()).map_err(BenchError::from)?;
    let rand_sel = uniform_sample(ps, k_max, seed).map_err(BenchError::from)?;

    let err_fps = nystrom_error_curve(spec, ps, &fps.indices, ks, None)?;
    let err_rand = nystrom_error_curve(spec, ps, &rand_sel.indices, ks, None)?;

    let header = vec![
        "k".to_string(),
        "fill_fps".to_string(),
        "fill_random".to_string(),
        "relerr_fps".to_string(),
        "relerr_random".to_string(),
    ];
    let rows = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            vec![
                k.to_string(),
                format!("{}", fps.fill_trace[k - 1]),
                format!("{}", rand_sel.fill_trace[k - 1]),
                format!("{}", err_fps[i].1),
                format!("{}", err_rand[i].1),
            ]
        })
        .collect();
    Ok(FigureData { header, rows })
}

/// Log10-magnitude histogram (bin width 1, each matrix scaled by its own
/// maximum entry) of `K22 + mu I`, the regularized Schur complement, and its
/// inverse, for an FPS landmark set of size `k`. Entries below 1e-20 of the
/// maximum (including exact zeros) land in the underflow row, bin -21.
pub fn histogram(spec: &KernelSpec, ps: &PointSet, k: usize) -> Result<FigureData> {
    guard_dense(ps.len())?;
    if k == 0 || k >= ps.len() {
        return Err(BenchError::Config(format!(
            "histogram needs 1 <= k < n, got k = {k}, n = {}",
            ps.len()
        )));
    }
    let sel = fps_sample(ps, k, ps.centroid_seed()).map_err(BenchError::from)?;
    let (schur, rest) = schur_complement_dense(spec, ps, &sel.indices)?;
    let mut k22 = assemble_block(spec, ps, &rest, &rest)?.values;
    k22.add_diagonal(spec.mu());

    // dense inverse of the Schur complement via its Cholesky factor
    let m = schur.nrows();
    let chol = cholesky(&schur, &JitterPolicy::default())?;
    let mut inv = Mat::zeros(m, m);
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        let col = spd_solve(&chol, &e);
        for i in 0..m {
            inv[(i, j)] = col[i];
        }
    }

    let bins = |mat: &Mat| -> Vec<usize> {
        let max = mat.max_abs();
        let mut counts = vec![0usize; 22]; // index 0 = underflow (-21), then -20..=0
        for v in mat.data() {
            let rel = v.abs() / max;
            if rel < 1e-20 {
                counts[0] += 1;
            } else {
                let b = rel.log10().floor().clamp(-20.0, 0.0) as i32;
                counts[(b + 21) as usize] += 1;
            }
        }
        counts
    };

    let (c_k22, c_schur, c_inv) = (bins(&k22), bins(&schur), bins(&inv));
    let header = vec![
        "bin_log10".to_string(),
        "k22_mu".to_string(),
        "schur".to_string(),
        "schur_inv".to_string(),
    ];
    let rows = (0..22)
        .map(|i| {
            let bin = i as i32 - 21;
            vec![
                bin.to_string(),
                c_k22[i].to_string(),
                c_schur[i].to_string(),
                c_inv[i].to_string(),
            ]
        })
        .collect();
    Ok(FigureData { header, rows })
}

/// Relative Nystrom error curves for the full set (ranks in multiples of
/// 10) and for a scaled subsample (ranks rescaled by n/m), in long format.
pub fn subsample_match(
    spec: &KernelSpec,
    ps: &PointSet,
    m: usize,
    seed: u64,
) -> Result<FigureData> {
    guard_dense(ps.len())?;
    let n = ps.len();
    if m < 2 || m > n {
        return Err(BenchError::Config(format!(
            "subsample size m = {m} must satisfy 2 <= m <= n = {n}"
        )));
    }

    // full-set curve at multiples of 10
    let full_sel = fps_sample(ps, n, ps.centroid_seed()).map_err(BenchError::from)?;
    let full_ranks: Vec<usize> = (10..=n).step_by(10).collect();
    let full_curve = nystrom_error_curve(spec, ps, &full_sel.indices, &full_ranks, None)?;

    // scaled subsample curve at every rank
    let est = afn_precond::adaptive::estimate_rank(spec, ps, m, seed)?;
    let scale = n as f64 / m as f64;

    let header = vec![
        "series".to_string(),
        "rank".to_string(),
        "relerr".to_string(),
    ];
    let mut rows = Vec::new();
    for (r, e) in &full_curve {
        rows.push(vec!["full".to_string(), r.to_string(), format!("{e}")]);
    }
    for (r, e) in &est.error_curve {
        rows.push(vec![
            "subsample".to_string(),
            format!("{}", (*r as f64 * scale).round()),
            format!("{e}"),
        ]);
    }
    Ok(FigureData { header, rows })
}
