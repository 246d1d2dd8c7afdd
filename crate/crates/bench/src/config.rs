//! Experiment configuration: the flat key-value config format with one
//! section per sweep, kernel parameter grids, and the benchmark defaults.

use crate::error::{BenchError, Result};
use afn_precond::kernel::{KernelFamily, KernelSpec};
use std::path::PathBuf;

/// Benchmark defaults.
pub mod defaults {
    pub const TOL: f64 = 1e-4;
    pub const MAXIT: usize = 500;
    pub const SEEDS: [u64; 3] = [0, 1, 2];
    pub const W_AFN: usize = 100;
    pub const W_FSAI: usize = 400;
    pub const RAN_RANK: usize = 3000;
    pub const N_MAX: usize = 20_000;
    pub const MEM_BUDGET_MB: usize = 2048;
    pub const IMQ_C: f64 = 1.0;
    pub const IMQ_P: f64 = 1.0;
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic {
        n: usize,
        d: usize,
        edge: Option<f64>,
    },
    Csv(PathBuf),
    SparseText {
        path: PathBuf,
        dim: Option<usize>,
    },
}

/// How grid values map onto the kernel parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Value is `l^2` (Gaussian table convention).
    L2,
    /// Value is `l` directly.
    L,
    /// Value is `1/l` (Matern table convention).
    InvL,
    /// Value is the inverse multiquadric `c`.
    C,
}

impl ParamKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(ParamKind::L2),
            "l" => Ok(ParamKind::L),
            "inv_l" => Ok(ParamKind::InvL),
            "c" => Ok(ParamKind::C),
            other => Err(BenchError::Config(format!(
                "unknown param_kind '{other}' (expected l2, l, inv_l, or c)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ParamKind::L2 => "l2",
            ParamKind::L => "l",
            ParamKind::InvL => "inv_l",
            ParamKind::C => "c",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Cg,
    Afn,
    Ran,
    Fsai,
    Nystrom,
    Auto,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cg" => Ok(Method::Cg),
            "afn" => Ok(Method::Afn),
            "ran" => Ok(Method::Ran),
            "fsai" => Ok(Method::Fsai),
            "nystrom" => Ok(Method::Nystrom),
            "auto" => Ok(Method::Auto),
            other => Err(BenchError::Config(format!(
                "unknown method '{other}' (expected cg, afn, ran, fsai, nystrom, or auto)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Cg => "cg",
            Method::Afn => "afn",
            Method::Ran => "ran",
            Method::Fsai => "fsai",
            Method::Nystrom => "nystrom",
            Method::Auto => "auto",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(BenchError::Config(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// One resolved sweep.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: DataSource,
    pub data_seed: u64,
    pub family: KernelFamily,
    pub param_kind: ParamKind,
    pub params: Vec<f64>,
    pub mus: Vec<f64>,
    pub methods: Vec<Method>,
    pub tol: f64,
    pub maxit: usize,
    pub seeds: Vec<u64>,
    pub w_afn: usize,
    pub w_fsai: usize,
    pub ran_rank: usize,
    /// Rank-estimation subsample size; `None` uses the size rule.
    pub subsample: Option<usize>,
    pub n_max: usize,
    pub mem_budget_mb: usize,
    pub record_timings: bool,
    pub imq_c: f64,
    pub imq_p: f64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub summary_out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, source: DataSource) -> Self {
        ExperimentConfig {
            name: name.into(),
            source,
            data_seed: 0,
            family: KernelFamily::Gaussian,
            param_kind: ParamKind::L2,
            params: Vec::new(),
            mus: vec![1e-4],
            methods: vec![Method::Cg],
            tol: defaults::TOL,
            maxit: defaults::MAXIT,
            seeds: defaults::SEEDS.to_vec(),
            w_afn: defaults::W_AFN,
            w_fsai: defaults::W_FSAI,
            ran_rank: defaults::RAN_RANK,
            subsample: None,
            n_max: defaults::N_MAX,
            mem_budget_mb: defaults::MEM_BUDGET_MB,
            record_timings: true,
            imq_c: defaults::IMQ_C,
            imq_p: defaults::IMQ_P,
            out: None,
            format: OutputFormat::Csv,
            summary_out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(BenchError::Config(format!(
                "sweep '{}': parameter grid is empty",
                self.name
            )));
        }
        if self.mus.is_empty() {
            return Err(BenchError::Config(format!(
                "sweep '{}': mu grid is empty",
                self.name
            )));
        }
        if self.methods.is_empty() {
            return Err(BenchError::Config(format!(
                "sweep '{}': method list is empty",
                self.name
            )));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config(format!(
                "sweep '{}': seed list is empty",
                self.name
            )));
        }
        if self.tol <= 0.0 || self.tol >= 1.0 || self.tol.is_nan() {
            return Err(BenchError::Config(format!(
                "sweep '{}': tol must lie in (0, 1), got {}",
                self.name, self.tol
            )));
        }
        if self.maxit == 0 {
            return Err(BenchError::Config(format!(
                "sweep '{}': maxit must be >= 1",
                self.name
            )));
        }
        Ok(())
    }

    /// Kernel spec for one grid cell.
    pub fn kernel_spec(&self, param: f64, mu: f64) -> Result<KernelSpec> {
        let spec = match (self.family, self.param_kind) {
            (KernelFamily::Gaussian, ParamKind::L2) => KernelSpec::gaussian(param.sqrt(), mu),
            (KernelFamily::Gaussian, ParamKind::L) => KernelSpec::gaussian(param, mu),
            (KernelFamily::Gaussian, ParamKind::InvL) => KernelSpec::gaussian(1.0 / param, mu),
            (KernelFamily::Matern32, ParamKind::L2) => KernelSpec::matern32(param.sqrt(), mu),
            (KernelFamily::Matern32, ParamKind::L) => KernelSpec::matern32(param, mu),
            (KernelFamily::Matern32, ParamKind::InvL) => KernelSpec::matern32(1.0 / param, mu),
            (KernelFamily::InverseMultiquadric, ParamKind::C) => {
                KernelSpec::inverse_multiquadric(param, self.imq_p, mu)
            }
            (KernelFamily::InverseMultiquadric, _) => {
                return Err(BenchError::Config(
                    "inverse multiquadric sweeps use param_kind = c".into(),
                ))
            }
            (_, ParamKind::C) => {
                return Err(BenchError::Config(
                    "param_kind = c only applies to the imq kernel".into(),
                ))
            }
        };
        spec.map_err(BenchError::from)
    }

    /// Cell label for result rows, e.g. `gaussian(l2=50)`.
    pub fn cell_label(&self, param: f64) -> String {
        format!(
            "{}({}={})",
            self.family.name(),
            self.param_kind.name(),
            param
        )
    }
}

fn parse_family(s: &str) -> Result<KernelFamily> {
    match s {
        "gaussian" => Ok(KernelFamily::Gaussian),
        "matern32" => Ok(KernelFamily::Matern32),
        "imq" => Ok(KernelFamily::InverseMultiquadric),
        other => Err(BenchError::Config(format!(
            "unknown kernel '{other}' (expected gaussian, matern32, or imq)"
        ))),
    }
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(s: &str, f: F) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(f)
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| BenchError::Config(format!("cannot parse '{s}' as a number")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| BenchError::Config(format!("cannot parse '{s}' as an integer")))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| BenchError::Config(format!("cannot parse '{s}' as an integer")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(BenchError::Config(format!(
            "cannot parse '{other}' as a boolean"
        ))),
    }
}

fn parse_source(key: &str, value: &str) -> Result<DataSource> {
    match key {
        "synthetic" => {
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            if parts.len() < 2 || parts.len() > 3 {
                return Err(BenchError::Config(format!(
                    "synthetic takes n,d[,edge], got '{value}'"
                )));
            }
            Ok(DataSource::Synthetic {
                n: parse_usize(parts[0])?,
                d: parse_usize(parts[1])?,
                edge: if parts.len() == 3 {
                    Some(parse_f64(parts[2])?)
                } else {
                    None
                },
            })
        }
        "csv" => Ok(DataSource::Csv(PathBuf::from(value))),
        "libsvm" => {
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            match parts.len() {
                1 => Ok(DataSource::SparseText {
                    path: PathBuf::from(parts[0]),
                    dim: None,
                }),
                2 => Ok(DataSource::SparseText {
                    path: PathBuf::from(parts[0]),
                    dim: Some(parse_usize(parts[1])?),
                }),
                _ => Err(BenchError::Config(format!(
                    "libsvm takes path[,dim], got '{value}'"
                ))),
            }
        }
        _ => unreachable!(),
    }
}

/// Parses the sweep config text: `key = value` lines, `#` comments, and one
/// `[sweep NAME]` section per sweep. Keys before the first section become
/// defaults for every sweep.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    #[derive(Default, Clone)]
    struct Pending {
        entries: Vec<(String, String)>,
    }

    let mut globals = Pending::default();
    let mut sections: Vec<(String, Pending)> = Vec::new();
    let mut current: Option<usize> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| {
                BenchError::Config(format!("line {}: unterminated section header", lineno + 1))
            })?;
            let name = inner
                .strip_prefix("sweep")
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| {
                    BenchError::Config(format!(
                        "line {}: section must be [sweep NAME], got [{inner}]",
                        lineno + 1
                    ))
                })?;
            sections.push((name.to_string(), Pending::default()));
            current = Some(sections.len() - 1);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            BenchError::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let entry = (key.trim().to_string(), value.trim().to_string());
        match current {
            None => globals.entries.push(entry),
            Some(i) => sections[i].1.entries.push(entry),
        }
    }

    if sections.is_empty() {
        return Err(BenchError::Config(
            "config defines no [sweep NAME] sections".into(),
        ));
    }

    let mut configs = Vec::new();
    for (name, pending) in sections {
        let mut cfg = ExperimentConfig::new(
            name,
            DataSource::Synthetic {
                n: 0,
                d: 0,
                edge: None,
            },
        );
        let mut have_source = false;
        for (key, value) in globals.entries.iter().chain(&pending.entries) {
            apply_key(&mut cfg, key, value, &mut have_source)?;
        }
        if !have_source {
            return Err(BenchError::Config(format!(
                "sweep '{}': no dataset (synthetic, csv, or libsvm)",
                cfg.name
            )));
        }
        cfg.validate()?;
        configs.push(cfg);
    }
    Ok(configs)
}

fn apply_key(
    cfg: &mut ExperimentConfig,
    key: &str,
    value: &str,
    have_source: &mut bool,
) -> Result<()> {
    match key {
        "synthetic" | "csv" | "libsvm" => {
            cfg.source = parse_source(key, value)?;
            *have_source = true;
        }
        "data_seed" => cfg.data_seed = parse_u64(value)?,
        "kernel" => cfg.family = parse_family(value)?,
        "param_kind" => cfg.param_kind = ParamKind::parse(value)?,
        "params" => cfg.params = parse_list(value, parse_f64)?,
        "mu" => cfg.mus = parse_list(value, parse_f64)?,
        "methods" => cfg.methods = parse_list(value, Method::parse)?,
        "tol" => cfg.tol = parse_f64(value)?,
        "maxit" => cfg.maxit = parse_usize(value)?,
        "seeds" => cfg.seeds = parse_list(value, parse_u64)?,
        "w_afn" => cfg.w_afn = parse_usize(value)?,
        "w_fsai" => cfg.w_fsai = parse_usize(value)?,
        "ran_rank" => cfg.ran_rank = parse_usize(value)?,
        "m" => cfg.subsample = Some(parse_usize(value)?),
        "n_max" => cfg.n_max = parse_usize(value)?,
        "mem_budget_mb" => cfg.mem_budget_mb = parse_usize(value)?,
        "record_timings" => cfg.record_timings = parse_bool(value)?,
        "imq_c" => cfg.imq_c = parse_f64(value)?,
        "imq_p" => cfg.imq_p = parse_f64(value)?,
        "out" => cfg.out = Some(PathBuf::from(value)),
        "format" => cfg.format = OutputFormat::parse(value)?,
        "summary_out" => cfg.summary_out = Some(PathBuf::from(value)),
        other => return Err(BenchError::Config(format!("unknown config key '{other}'"))),
    }
    Ok(())
}
