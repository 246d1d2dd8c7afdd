use afn_bench::config::{defaults, ExperimentConfig, Method, ParamKind};
use afn_bench::data::{default_edge, gen_synthetic, load_points_csv, load_points_sparse_text};
use afn_bench::emit::{emit_results, fmt_g17, results_to_csv, summarize, summary_to_csv};
use afn_bench::error::{BenchError, Result};
use afn_bench::figures;
use afn_bench::sweep::{load_dataset, run_sweep_on};
use afn_precond::adaptive::{default_subsample_size, estimate_rank};
use afn_precond::geometry::PointSet;
use afn_precond::kernel::{KernelFamily, KernelSpec};
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

/// Benchmark driver for regularized kernel system solvers.
#[derive(Parser)]
#[command(name = "afn-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic uniform-cube dataset as CSV.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Cube edge; defaults to n^(1/d) for constant density.
        #[arg(long)]
        edge: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the Nystrom rank of a kernel matrix by subsampling.
    EstimateRank {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Subsample size; defaults to max(100, n/100) capped at 500.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit a JSON object instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Solve one regularized system with a chosen method.
    Solve {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// cg, afn, ran, fsai, nystrom, or auto.
        #[arg(long)]
        method: String,
        /// Landmark count override (afn/nystrom); estimated when omitted.
        #[arg(long)]
        k: Option<usize>,
        /// FSAI pattern size override.
        #[arg(long)]
        w: Option<usize>,
        #[arg(long, default_value_t = defaults::TOL)]
        tol: f64,
        #[arg(long, default_value_t = defaults::MAXIT)]
        maxit: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the result row as CSV.
        #[arg(long)]
        rows: Option<PathBuf>,
    },
    /// Run the sweeps defined in a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override every sweep's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit plot-ready figure data.
    Figure {
        /// spectrum, fill-vs-error, histogram, or subsample-match.
        #[arg(long)]
        kind: String,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Parameter grid for kind = spectrum.
        #[arg(long)]
        params: Option<String>,
        /// Grid convention for --params (l2, l, inv_l, c).
        #[arg(long, default_value = "l2")]
        param_kind: String,
        /// Rank list for kind = fill-vs-error.
        #[arg(long)]
        ks: Option<String>,
        /// Landmark count for kind = histogram.
        #[arg(long)]
        k: Option<usize>,
        /// Subsample size for kind = subsample-match.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        fig_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DataSourceArg {
    /// CSV point file, one comma-separated point per line.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Sparse text dataset (label index:value ...).
    #[arg(long)]
    libsvm: Option<PathBuf>,
    /// Synthetic uniform cube: n,d[,edge].
    #[arg(long)]
    synthetic: Option<String>,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    source: DataSourceArg,
    /// Declared dimension for --libsvm (inferred when omitted).
    #[arg(long)]
    libsvm_dim: Option<usize>,
    /// Seed for --synthetic generation.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
}

impl DataArgs {
    fn load(&self) -> Result<PointSet> {
        if let Some(path) = &self.source.points {
            return load_points_csv(path);
        }
        if let Some(path) = &self.source.libsvm {
            return load_points_sparse_text(path, self.libsvm_dim);
        }
        let text = self.source.synthetic.as_ref().expect("clap group");
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(BenchError::Config(format!(
                "--synthetic takes n,d[,edge], got '{text}'"
            )));
        }
        let n: usize = parts[0]
            .parse()
            .map_err(|_| BenchError::Config(format!("bad n '{}'", parts[0])))?;
        let d: usize = parts[1]
            .parse()
            .map_err(|_| BenchError::Config(format!("bad d '{}'", parts[1])))?;
        let edge = if parts.len() == 3 {
            parts[2]
                .parse()
                .map_err(|_| BenchError::Config(format!("bad edge '{}'", parts[2])))?
        } else {
            default_edge(n, d)
        };
        gen_synthetic(n, d, edge, self.data_seed)
    }
}

#[derive(Args)]
struct KernelArgs {
    /// gaussian, matern32, or imq.
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Length scale given as l^2.
    #[arg(long, group = "lscale")]
    l2: Option<f64>,
    /// Length scale given directly.
    #[arg(long, group = "lscale")]
    l: Option<f64>,
    /// Length scale given as 1/l.
    #[arg(long, group = "lscale")]
    inv_l: Option<f64>,
    /// Inverse multiquadric c.
    #[arg(long, default_value_t = defaults::IMQ_C)]
    imq_c: f64,
    /// Inverse multiquadric exponent p.
    #[arg(long, default_value_t = defaults::IMQ_P)]
    imq_p: f64,
    /// Regularization.
    #[arg(long, default_value_t = 1e-4)]
    mu: f64,
}

impl KernelArgs {
    fn family(&self) -> Result<KernelFamily> {
        match self.kernel.as_str() {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "matern32" => Ok(KernelFamily::Matern32),
            "imq" => Ok(KernelFamily::InverseMultiquadric),
            other => Err(BenchError::Config(format!("unknown kernel '{other}'"))),
        }
    }

    fn length_scale(&self) -> Result<f64> {
        match (self.l2, self.l, self.inv_l) {
            (Some(v), None, None) => Ok(v.sqrt()),
            (None, Some(v), None) => Ok(v),
            (None, None, Some(v)) => Ok(1.0 / v),
            (None, None, None) => Ok(1.0),
            _ => unreachable!("clap group"),
        }
    }

    fn spec(&self) -> Result<KernelSpec> {
        let family = self.family()?;
        let spec = match family {
            KernelFamily::Gaussian => KernelSpec::gaussian(self.length_scale()?, self.mu),
            KernelFamily::Matern32 => KernelSpec::matern32(self.length_scale()?, self.mu),
            KernelFamily::InverseMultiquadric => {
                KernelSpec::inverse_multiquadric(self.imq_c, self.imq_p, self.mu)
            }
        };
        spec.map_err(BenchError::from)
    }
}

fn init_threads() {
    if let Ok(value) = std::env::var("AFN_NUM_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen {
            n,
            d,
            edge,
            seed,
            out,
        } => {
            let edge = edge.unwrap_or_else(|| default_edge(n, d));
            let ps = gen_synthetic(n, d, edge, seed)?;
            let mut text = String::new();
            for i in 0..ps.len() {
                let fields: Vec<String> = ps.point(i).iter().map(|c| fmt_g17(*c)).collect();
                text.push_str(&fields.join(","));
                text.push('\n');
            }
            fs::write(&out, text)?;
            println!(
                "wrote {} points (d = {d}, edge = {edge}) to {}",
                n,
                out.display()
            );
            Ok(())
        }

        Cmd::EstimateRank {
            data,
            kernel,
            m,
            seed,
            json,
        } => {
            let ps = data.load()?;
            let spec = kernel.spec()?;
            let m = m.unwrap_or_else(|| default_subsample_size(ps.len()));
            let est = estimate_rank(&spec, &ps, m, seed)?;
            if json {
                println!(
                    "{{\"k_hat\":{},\"r_subsample\":{},\"m\":{},\"refined\":{}}}",
                    est.k_hat, est.r_subsample, est.m, est.refined
                );
            } else {
                println!(
                    "estimated rank k = {} (subsample crossing r = {} of m = {}, refined = {})",
                    est.k_hat, est.r_subsample, est.m, est.refined
                );
            }
            Ok(())
        }

        Cmd::Solve {
            data,
            kernel,
            method,
            k,
            w,
            tol,
            maxit,
            seed,
            rows,
        } => {
            let ps = data.load()?;
            let spec = kernel.spec()?;
            let method = Method::parse(&method)?;

            let mut cfg = ExperimentConfig::new(
                "solve",
                afn_bench::DataSource::Synthetic {
                    n: ps.len(),
                    d: ps.dim(),
                    edge: None,
                },
            );
            cfg.family = spec.family;
            cfg.param_kind = match spec.family {
                KernelFamily::InverseMultiquadric => ParamKind::C,
                _ => ParamKind::L,
            };
            cfg.params = vec![match spec.family {
                KernelFamily::InverseMultiquadric => spec.imq_c,
                _ => spec.length_scale,
            }];
            cfg.imq_c = spec.imq_c;
            cfg.imq_p = spec.imq_p;
            cfg.mus = vec![spec.regularization];
            cfg.methods = vec![method];
            cfg.tol = tol;
            cfg.maxit = maxit;
            cfg.seeds = vec![seed];
            if let Some(w) = w {
                cfg.w_afn = w;
                cfg.w_fsai = w;
            }
            if let Some(k) = k {
                // a fixed landmark count bypasses rank estimation
                cfg.subsample = None;
                cfg.ran_rank = k;
            }

            let all_rows = if let Some(k) = k {
                solve_with_fixed_k(&cfg, &ps, &spec, method, k, seed)?
            } else {
                run_sweep_on(&cfg, &ps)?
            };
            let row = &all_rows[0];
            println!(
                "method = {}, k = {}, iterations = {}, converged = {}, relres = {:.3e}, setup = {:.3}s, solve = {:.3}s",
                row.method, row.k, row.iters, row.converged, row.relres, row.setup_s, row.solve_s
            );
            if let Some(path) = rows {
                fs::write(&path, results_to_csv(&all_rows))?;
            }
            if !row.converged {
                return Err(BenchError::Numeric(afn_precond::Error::InvalidArgument(
                    format!(
                        "solve did not converge within {maxit} iterations (relres {:.3e})",
                        row.relres
                    ),
                )));
            }
            Ok(())
        }

        Cmd::Sweep { config, out } => {
            let text = fs::read_to_string(&config)?;
            let configs = afn_bench::config::parse_config(&text)?;
            for mut cfg in configs {
                if let Some(out) = &out {
                    cfg.out = Some(out.clone());
                }
                let ps = load_dataset(&cfg)?;
                eprintln!(
                    "sweep '{}': n = {}, d = {}, {} cells",
                    cfg.name,
                    ps.len(),
                    ps.dim(),
                    cfg.params.len() * cfg.mus.len() * cfg.methods.len() * cfg.seeds.len()
                );
                let rows = run_sweep_on(&cfg, &ps)?;
                match &cfg.out {
                    Some(path) => {
                        emit_results(&rows, cfg.format, path)?;
                        eprintln!(
                            "sweep '{}': wrote {} rows to {}",
                            cfg.name,
                            rows.len(),
                            path.display()
                        );
                    }
                    None => print!("{}", results_to_csv(&rows)),
                }
                if let Some(path) = &cfg.summary_out {
                    fs::write(path, summary_to_csv(&summarize(&rows)))?;
                }
            }
            Ok(())
        }

        Cmd::Figure {
            kind,
            data,
            kernel,
            params,
            param_kind,
            ks,
            k,
            m,
            fig_seed,
            out,
        } => {
            let ps = data.load()?;
            let spec = kernel.spec()?;
            let fig = match kind.as_str() {
                "spectrum" => {
                    let params = params.ok_or_else(|| {
                        BenchError::Config("spectrum needs --params".into())
                    })?;
                    let pk = ParamKind::parse(&param_kind)?;
                    let mut cfg = ExperimentConfig::new("fig", afn_bench::DataSource::Synthetic {
                        n: ps.len(),
                        d: ps.dim(),
                        edge: None,
                    });
                    cfg.family = kernel.family()?;
                    cfg.param_kind = pk;
                    cfg.imq_c = kernel.imq_c;
                    cfg.imq_p = kernel.imq_p;
                    let mut specs = Vec::new();
                    for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                        let value: f64 = part.parse().map_err(|_| {
                            BenchError::Config(format!("bad parameter '{part}'"))
                        })?;
                        specs.push((
                            format!("{}={}", pk.name(), part),
                            cfg.kernel_spec(value, kernel.mu)?,
                        ));
                    }
                    figures::spectrum(&specs, &ps)?
                }
                "fill-vs-error" => {
                    let ks_text = ks.ok_or_else(|| {
                        BenchError::Config("fill-vs-error needs --ks".into())
                    })?;
                    let ks: Vec<usize> = ks_text
                        .split(',')
                        .map(str::trim)
                        .filter(|p| !p.is_empty())
                        .map(|p| {
                            p.parse().map_err(|_| {
                                BenchError::Config(format!("bad rank '{p}'"))
                            })
                        })
                        .collect::<Result<_>>()?;
                    figures::fill_vs_error(&spec, &ps, &ks, fig_seed)?
                }
                "histogram" => {
                    let k = k.ok_or_else(|| BenchError::Config("histogram needs --k".into()))?;
                    figures::histogram(&spec, &ps, k)?
                }
                "subsample-match" => {
                    let m = m.ok_or_else(|| {
                        BenchError::Config("subsample-match needs --m".into())
                    })?;
                    figures::subsample_match(&spec, &ps, m, fig_seed)?
                }
                other => {
                    return Err(BenchError::Config(format!(
                        "unknown figure kind '{other}' (expected spectrum, fill-vs-error, histogram, or subsample-match)"
                    )))
                }
            };
            fig.write(&out)?;
            println!("wrote {} rows to {}", fig.rows.len(), out.display());
            Ok(())
        }
    }
}

/// Single solve with an explicit landmark count (no rank estimation).
fn solve_with_fixed_k(
    cfg: &ExperimentConfig,
    ps: &PointSet,
    spec: &KernelSpec,
    method: Method,
    k: usize,
    seed: u64,
) -> Result<Vec<afn_bench::ResultRow>> {
    use afn_bench::sweep::{random_rhs, SystemOp};
    use afn_precond::geometry::fps_sample;
    use afn_precond::linalg::{pcg, FnOp};
    use afn_precond::precond::{
        apply_afn_inv, apply_nystrom_inv, build_afn_with, build_nystrom, AfnOptions,
    };
    use std::time::Instant;

    let n = ps.len();
    let b = random_rhs(n, seed);
    let op = SystemOp::new(spec, ps, cfg.mem_budget_mb);
    let setup_start = Instant::now();

    #[allow(clippy::large_enum_variant)]
    enum Built {
        Nys(afn_precond::precond::NystromPreconditioner),
        Afn(afn_precond::precond::AfnFactors),
    }
    let built = match method {
        Method::Afn | Method::Auto => Built::Afn(build_afn_with(
            spec,
            ps,
            k.min(n - 1).max(1),
            cfg.w_afn.min(n),
            &AfnOptions {
                rng_seed: seed,
                ..AfnOptions::default()
            },
        )?),
        Method::Nystrom => {
            let sel = fps_sample(ps, k.min(n), ps.centroid_seed())?;
            Built::Nys(build_nystrom(spec, ps, &sel)?)
        }
        Method::Ran => {
            let sel = afn_precond::geometry::uniform_sample(ps, k.min(n), seed)?;
            Built::Nys(build_nystrom(spec, ps, &sel)?)
        }
        _ => {
            return Err(BenchError::Config(
                "--k only applies to afn, ran, nystrom, or auto".into(),
            ))
        }
    };
    let setup_s = setup_start.elapsed().as_secs_f64();

    let minv = FnOp::new(n, |r: &[f64], y: &mut [f64]| match &built {
        Built::Nys(p) => y.copy_from_slice(&apply_nystrom_inv(p, r)),
        Built::Afn(f) => y.copy_from_slice(&apply_afn_inv(f, r)),
    });
    let (_, report) = pcg(&op, &b, Some(&minv), cfg.tol, cfg.maxit)?;

    let krow = match &built {
        Built::Nys(p) => p.rank(),
        Built::Afn(f) => f.k(),
    };
    Ok(vec![afn_bench::ResultRow {
        kernel: cfg.cell_label(cfg.params[0]),
        family: cfg.family.name().to_string(),
        param: cfg.params[0],
        mu: spec.regularization,
        method: method.name().to_string(),
        k: krow,
        iters: report.iterations,
        converged: report.converged,
        setup_s,
        solve_s: report.solve_seconds,
        relres: report.final_relative_residual(),
        seed,
    }])
}
