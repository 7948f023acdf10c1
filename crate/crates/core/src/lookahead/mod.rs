//! Finite-look-ahead coupling built on the Karhunen-Loeve expansion.

pub mod kl;
pub mod paths;
pub mod scalar;

pub use kl::{build_e, iterated_eigenfunction_value, mode_frequency, CouplingMatrixE, KLBasis};
pub use paths::{simulate_lookahead_paths, BlockRecord, CoupledPaths, PathCouplingSettings};
pub use scalar::{
    block_gain, block_gains, block_matrix, bounded_gain, bounded_norm, eigen_coefficients,
    nu_sequence, simulate_lookahead_scalar, zeta_partial_sum, BlockSchedule, BlockState,
    ScalarPlan,
};
