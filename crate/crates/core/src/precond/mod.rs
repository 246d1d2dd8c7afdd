//! The four preconditioners for `(K + mu I) a = b`: FPS-landmark Nystrom,
//! randomized (uniform-landmark) Nystrom, FSAI on `K + mu I`, and the
//! adaptive factorized Nystrom block preconditioner.

pub mod afn;
pub mod fsai;
pub mod nystrom;
pub mod schur;

pub use afn::{
    apply_afn_inv, build_afn, build_afn_with, AfnFactors, AfnInverseOp, AfnOptions,
    DEFAULT_LANDMARK_CAP,
};
pub use fsai::{apply_fsai_inv, build_fsai, build_fsai_plain};
pub use nystrom::{
    apply_nystrom_inv, build_nystrom, nystrom_error, nystrom_error_curve, nystrom_error_rel,
    NystromInverseOp, NystromPreconditioner,
};
pub use schur::{
    schur_complement_dense, DenseSpdOracle, RegularizedKernelOracle, SchurOracle, SpdOracle,
    DEFAULT_MEMORY_BUDGET,
};
