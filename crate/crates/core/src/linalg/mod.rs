//! Dense and sparse linear algebra shared by every preconditioner: Cholesky
//! with jitter escalation, triangular solves, a symmetric eigensolver,
//! sparse lower-triangular ops, and preconditioned conjugate gradient.

pub mod dense;
pub mod pcg;
pub mod sparse;

pub use dense::{
    cholesky, forward_solve_rows, qr_thin, spd_solve, sym_eig, sym_eigenvalues, tri_solve,
    CholeskyFactor, JitterPolicy, TriMode, DENSE_EIG_LIMIT,
};
pub use pcg::{
    pcg, power_iteration, spectral_norm, FnOp, LinearOp, SolveReport, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
pub use sparse::{sparse_tri_apply, SparseLowerTriangular};
