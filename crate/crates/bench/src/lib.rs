//! Benchmark harness for the kernel-system preconditioners: dataset
//! generation and ingestion, PCG sweeps over kernel-parameter grids, and
//! plot-ready figure data.

pub mod config;
pub mod data;
pub mod emit;
pub mod error;
pub mod figures;
pub mod sweep;

pub use config::{DataSource, ExperimentConfig, Method, OutputFormat, ParamKind};
pub use data::{default_edge, gen_synthetic, load_points_csv, load_points_sparse_text};
pub use emit::{
    emit_results, parse_results_csv, results_to_csv, results_to_json, summarize, summary_to_csv,
    ResultRow, SummaryRow,
};
pub use error::{BenchError, Result};
pub use figures::{fill_vs_error, histogram, spectrum, subsample_match, FigureData};
pub use sweep::{load_dataset, random_rhs, run_sweep, run_sweep_on, SystemOp};
