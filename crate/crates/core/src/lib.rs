//! Preconditioned iterative solvers for regularized kernel systems
//! `(K + mu I) a = b`.
//!
//! The crate provides four preconditioners — the adaptive factorized Nystrom
//! (AFN) block factorization, classical FPS-landmark Nystrom, randomized
//! (uniform-landmark) Nystrom, and a factorized sparse approximate inverse
//! (FSAI) — together with the geometry (farthest point sampling, fill and
//! separation distances, kNN patterns), the dense/sparse linear algebra, and
//! the subsample-based rank estimation that picks a preconditioner per
//! kernel instance.

pub mod adaptive;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod mat;
pub mod precond;

pub use error::{Error, Result};
