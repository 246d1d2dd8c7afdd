use thiserror::Error;

/// Errors produced by the solver and preconditioner builders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("Cholesky breakdown at pivot {index} (value {value:e}) after {attempts} attempts")]
    CholeskyBreakdown {
        index: usize,
        value: f64,
        attempts: usize,
    },

    #[error("symmetric eigensolver did not converge for eigenvalue {index}")]
    EigNoConvergence { index: usize },

    #[error("conjugate gradient breakdown at iteration {iteration}: p'Ap = {value:e}")]
    CgBreakdown { iteration: usize, value: f64 },

    #[error("FSAI row {row}: {source}")]
    FsaiRow {
        row: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
