use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
#[allow(clippy::large_enum_variant)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Numeric(#[from] afn_precond::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    /// Process exit code: 1 for configuration/parse/i-o problems, 2 for
    /// numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Numeric(_) => 2,
            _ => 1,
        }
    }
}
