//! Sweep execution: one PCG solve per grid cell x method x seed, with
//! preconditioner builds timed separately from the iteration.

use crate::config::{DataSource, ExperimentConfig, Method};
use crate::data::{default_edge, gen_synthetic, load_points_csv, load_points_sparse_text};
use crate::emit::ResultRow;
use crate::error::{BenchError, Result};
use afn_precond::adaptive::{
    choose_preconditioner, default_subsample_size, PrecondKind, StrategyOverrides,
};
use afn_precond::geometry::{fps_sample, uniform_sample, PointSet};
use afn_precond::kernel::{assemble_full, matvec, KernelSpec};
use afn_precond::linalg::{pcg, LinearOp, SolveReport};
use afn_precond::mat::{dot, Mat};
use afn_precond::precond::{
    apply_afn_inv, apply_fsai_inv, apply_nystrom_inv, build_afn_with, build_fsai_plain,
    build_nystrom, AfnOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::time::Instant;

/// Loads or generates the configured dataset and applies the desk-scale
/// guard.
pub fn load_dataset(config: &ExperimentConfig) -> Result<PointSet> {
    let ps = match &config.source {
        DataSource::Synthetic { n, d, edge } => {
            let e = edge.unwrap_or_else(|| default_edge(*n, *d));
            gen_synthetic(*n, *d, e, config.data_seed)?
        }
        DataSource::Csv(path) => load_points_csv(path)?,
        DataSource::SparseText { path, dim } => load_points_sparse_text(path, *dim)?,
    };
    if ps.len() > config.n_max {
        return Err(BenchError::Config(format!(
            "dataset has {} points, above the dense-run guard n_max = {}; \
             raise n_max explicitly to run anyway",
            ps.len(),
            config.n_max
        )));
    }
    Ok(ps)
}

/// The system operator `K + mu I`: dense when the kernel matrix fits the
/// memory budget, otherwise blocked on-the-fly products.
pub enum SystemOp<'a> {
    Dense { k: Mat, mu: f64 },
    Blocked { spec: KernelSpec, ps: &'a PointSet },
}

impl SystemOp<'_> {
    pub fn new<'a>(spec: &KernelSpec, ps: &'a PointSet, mem_budget_mb: usize) -> SystemOp<'a> {
        let n = ps.len();
        let bytes = n.saturating_mul(n).saturating_mul(8);
        if bytes <= mem_budget_mb.saturating_mul(1 << 20) {
            SystemOp::Dense {
                k: assemble_full(spec, ps),
                mu: spec.mu(),
            }
        } else {
            SystemOp::Blocked { spec: *spec, ps }
        }
    }
}

impl LinearOp for SystemOp<'_> {
    fn dim(&self) -> usize {
        match self {
            SystemOp::Dense { k, .. } => k.nrows(),
            SystemOp::Blocked { ps, .. } => ps.len(),
        }
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            SystemOp::Dense { k, mu } => {
                use rayon::prelude::*;
                y.par_chunks_mut(64).enumerate().for_each(|(b, chunk)| {
                    for (r, o) in chunk.iter_mut().enumerate() {
                        let i = b * 64 + r;
                        *o = dot(k.row(i), x) + mu * x[i];
                    }
                });
            }
            SystemOp::Blocked { spec, ps } => {
                let kv = matvec(spec, ps, x, 256).expect("dimension checked");
                for (i, o) in y.iter_mut().enumerate() {
                    *o = kv[i] + spec.mu() * x[i];
                }
            }
        }
    }
}

/// Uniform `[-0.5, 0.5]` right-hand side, deterministic per seed.
pub fn random_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()
}

#[allow(clippy::large_enum_variant)]
enum BuiltPrecond {
    Nystrom(afn_precond::precond::NystromPreconditioner),
    Fsai(afn_precond::linalg::SparseLowerTriangular),
    Afn(afn_precond::precond::AfnFactors),
}

impl LinearOp for BuiltPrecond {
    fn dim(&self) -> usize {
        match self {
            BuiltPrecond::Nystrom(p) => p.dim(),
            BuiltPrecond::Fsai(g) => g.dim(),
            BuiltPrecond::Afn(f) => f.dim(),
        }
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            BuiltPrecond::Nystrom(p) => y.copy_from_slice(&apply_nystrom_inv(p, x)),
            BuiltPrecond::Fsai(g) => y.copy_from_slice(&apply_fsai_inv(g, x)),
            BuiltPrecond::Afn(f) => y.copy_from_slice(&apply_afn_inv(f, x)),
        }
    }
}

impl BuiltPrecond {
    fn k(&self) -> usize {
        match self {
            BuiltPrecond::Fsai(_) => 0,
            BuiltPrecond::Nystrom(p) => p.rank(),
            BuiltPrecond::Afn(f) => f.k(),
        }
    }
}

fn build_method(
    config: &ExperimentConfig,
    spec: &KernelSpec,
    ps: &PointSet,
    method: Method,
    seed: u64,
    estimates: &mut HashMap<(usize, u64), usize>,
    param_idx: usize,
) -> Result<Option<BuiltPrecond>> {
    let n = ps.len();
    let m_sub = config
        .subsample
        .unwrap_or_else(|| default_subsample_size(n));
    let estimated =
        |spec: &KernelSpec, estimates: &mut HashMap<(usize, u64), usize>| -> Result<usize> {
            if let Some(&k) = estimates.get(&(param_idx, seed)) {
                return Ok(k);
            }
            let est = afn_precond::adaptive::estimate_rank(spec, ps, m_sub, seed)?;
            estimates.insert((param_idx, seed), est.k_hat);
            Ok(est.k_hat)
        };

    match method {
        Method::Cg => Ok(None),
        Method::Fsai => Ok(Some(BuiltPrecond::Fsai(build_fsai_plain(
            spec,
            ps,
            config.w_fsai.min(n),
        )?))),
        Method::Ran => {
            let k = config.ran_rank.min(n);
            let sel = uniform_sample(ps, k, seed)?;
            Ok(Some(BuiltPrecond::Nystrom(build_nystrom(spec, ps, &sel)?)))
        }
        Method::Nystrom => {
            let k_hat = estimated(spec, estimates)?;
            let k = k_hat.max(1).min(n);
            let sel = fps_sample(ps, k, ps.centroid_seed())?;
            Ok(Some(BuiltPrecond::Nystrom(build_nystrom(spec, ps, &sel)?)))
        }
        Method::Afn => {
            let k_hat = estimated(spec, estimates)?;
            let k = k_hat
                .min(afn_precond::precond::DEFAULT_LANDMARK_CAP)
                .min(n - 1)
                .max(1);
            let opts = AfnOptions {
                rng_seed: seed,
                ..AfnOptions::default()
            };
            Ok(Some(BuiltPrecond::Afn(build_afn_with(
                spec,
                ps,
                k,
                config.w_afn.min(n),
                &opts,
            )?)))
        }
        Method::Auto => {
            let choice =
                choose_preconditioner(spec, ps, m_sub, seed, &StrategyOverrides::default())?;
            estimates.insert((param_idx, seed), choice.estimate.k_hat);
            match choice.chosen {
                PrecondKind::Afn => {
                    let opts = AfnOptions {
                        rng_seed: seed,
                        ..AfnOptions::default()
                    };
                    Ok(Some(BuiltPrecond::Afn(build_afn_with(
                        spec,
                        ps,
                        choice.k_used.min(n - 1).max(1),
                        config.w_afn.min(n),
                        &opts,
                    )?)))
                }
                PrecondKind::Nystrom => {
                    let sel = fps_sample(ps, choice.k_used, ps.centroid_seed())?;
                    Ok(Some(BuiltPrecond::Nystrom(build_nystrom(spec, ps, &sel)?)))
                }
            }
        }
    }
}

/// Runs every `(parameter, mu, method, seed)` cell in configured order.
/// Numeric failures become rows with `converged = false` and NaN residual;
/// they never abort the sweep.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let ps = load_dataset(config)?;
    run_sweep_on(config, &ps)
}

/// Sweep over an already-loaded dataset.
pub fn run_sweep_on(config: &ExperimentConfig, ps: &PointSet) -> Result<Vec<ResultRow>> {
    let n = ps.len();
    let mut rows = Vec::new();
    let mut estimates: HashMap<(usize, u64), usize> = HashMap::new();

    for (param_idx, &param) in config.params.iter().enumerate() {
        // the operator depends on mu only through the diagonal; assemble the
        // kernel part once per parameter
        let probe_spec = config.kernel_spec(param, config.mus[0])?;
        let op_template = SystemOp::new(&probe_spec, ps, config.mem_budget_mb);

        for &mu in &config.mus {
            let spec = config.kernel_spec(param, mu)?;
            let op: SystemOp = match &op_template {
                SystemOp::Dense { k, .. } => SystemOp::Dense { k: k.clone(), mu },
                SystemOp::Blocked { .. } => SystemOp::Blocked { spec, ps },
            };
            for &method in &config.methods {
                for &seed in &config.seeds {
                    let b = random_rhs(n, seed);
                    let setup_start = Instant::now();
                    let built =
                        build_method(config, &spec, ps, method, seed, &mut estimates, param_idx);
                    let setup_s = setup_start.elapsed().as_secs_f64();
                    let row = match built {
                        Ok(precond) => {
                            let k_used = precond.as_ref().map_or(0, BuiltPrecond::k);
                            let minv = precond.as_ref().map(|p| p as &dyn LinearOp);
                            match pcg(&op, &b, minv, config.tol, config.maxit) {
                                Ok((_, report)) => make_row(
                                    config, param, mu, method, k_used, &report, setup_s, seed,
                                ),
                                Err(_) => {
                                    failure_row(config, param, mu, method, k_used, setup_s, seed)
                                }
                            }
                        }
                        Err(_) => failure_row(config, param, mu, method, 0, setup_s, seed),
                    };
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn make_row(
    config: &ExperimentConfig,
    param: f64,
    mu: f64,
    method: Method,
    k: usize,
    report: &SolveReport,
    setup_s: f64,
    seed: u64,
) -> ResultRow {
    ResultRow {
        kernel: config.cell_label(param),
        family: config.family.name().to_string(),
        param,
        mu,
        method: method.name().to_string(),
        k,
        iters: report.iterations,
        converged: report.converged,
        setup_s: if config.record_timings { setup_s } else { 0.0 },
        solve_s: if config.record_timings {
            report.solve_seconds
        } else {
            0.0
        },
        relres: report.final_relative_residual(),
        seed,
    }
}

fn failure_row(
    config: &ExperimentConfig,
    param: f64,
    mu: f64,
    method: Method,
    k: usize,
    setup_s: f64,
    seed: u64,
) -> ResultRow {
    ResultRow {
        kernel: config.cell_label(param),
        family: config.family.name().to_string(),
        param,
        mu,
        method: method.name().to_string(),
        k,
        iters: 0,
        converged: false,
        setup_s: if config.record_timings { setup_s } else { 0.0 },
        solve_s: 0.0,
        relres: f64::NAN,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DataSource, ExperimentConfig, Method};

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            "tiny",
            DataSource::Synthetic {
                n: 80,
                d: 2,
                edge: None,
            },
        );
        cfg.params = vec![2.0];
        cfg.mus = vec![1e-2];
        cfg.methods = vec![Method::Cg];
        cfg.seeds = vec![0, 1, 2];
        cfg.record_timings = false;
        cfg
    }

    #[test]
    fn cg_sweep_emits_one_row_per_seed() {
        let rows = run_sweep(&tiny_config()).unwrap();
        assert_eq!(rows.len(), 3);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.method, "cg");
            assert_eq!(r.seed, i as u64);
            assert!(r.iters <= 500);
        }
    }

    #[test]
    fn huge_mu_makes_cg_trivial() {
        let mut cfg = tiny_config();
        cfg.mus = vec![1e8];
        let rows = run_sweep(&cfg).unwrap();
        for r in &rows {
            assert!(r.converged);
            assert!(
                r.iters <= 2,
                "near-identity system took {} iterations",
                r.iters
            );
        }
    }

    #[test]
    fn sweep_is_reproducible() {
        let mut cfg = tiny_config();
        cfg.methods = vec![Method::Cg, Method::Afn, Method::Ran];
        cfg.subsample = Some(30);
        cfg.ran_rank = 20;
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_convergence_is_recorded_not_fatal() {
        let mut cfg = ExperimentConfig::new(
            "hard",
            DataSource::Synthetic {
                n: 250,
                d: 3,
                edge: None,
            },
        );
        cfg.params = vec![6.0];
        cfg.mus = vec![1e-6];
        cfg.methods = vec![Method::Cg];
        cfg.seeds = vec![0];
        cfg.maxit = 3;
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(!rows[0].converged);
        assert_eq!(rows[0].iters, 3);
        assert!(rows[0].relres.is_finite());
    }

    #[test]
    fn desk_scale_guard_refuses_oversize_runs() {
        let mut cfg = tiny_config();
        cfg.n_max = 50;
        match run_sweep(&cfg) {
            Err(BenchError::Config(msg)) => assert!(msg.contains("n_max")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn preconditioned_methods_beat_cg_on_a_hard_cell() {
        let mut cfg = ExperimentConfig::new(
            "mid",
            DataSource::Synthetic {
                n: 300,
                d: 3,
                edge: None,
            },
        );
        cfg.params = vec![6.0]; // l2 = 6: middle length-scale at this density
        cfg.mus = vec![1e-4];
        cfg.methods = vec![Method::Cg, Method::Afn, Method::Nystrom, Method::Auto];
        cfg.seeds = vec![0];
        cfg.subsample = Some(60);
        cfg.w_afn = 30;
        let rows = run_sweep(&cfg).unwrap();
        let cg = &rows[0];
        for r in &rows[1..] {
            assert!(r.converged, "{} failed: {r:?}", r.method);
            assert!(
                r.iters <= cg.iters,
                "{} took {} vs cg {}",
                r.method,
                r.iters,
                cg.iters
            );
        }
    }
}
