//! Dense complex linear algebra: matrices, states, partial traces, spectra and entropies.
//!
//! All logarithms are base 2. Matrices are dense and row-major; the Hermitian
//! eigensolver and QR are delegated to `nalgebra`.

mod eigen;
mod matrix;
mod operators;

pub use eigen::{eig_herm, HermFactor, Spectrum, TOL_HERM};
pub use matrix::{ComplexMatrix, C64, ONE, ZERO};
pub use operators::{
    mat_sqrt_psd, operator_interval_check, partial_trace, partial_trace_matrix, permute_factors,
    shannon_entropy, support_projector, trace_distance, validate_distribution, von_neumann_entropy,
    DensityOperator, FactoredOperator, HermitianOperator, TOL_PSD, TOL_TRACE,
};

pub(crate) use eigen::{eig_herm_unchecked, eigenvalues_unchecked};
pub(crate) use operators::{default_rank_tol, entropy_of, log2_psd, support_from_spectrum, trace_norm};

/// Kronecker product of two matrices.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Eigenvalue floor used when evaluating `log2` of states.
pub(crate) const LOG_FLOOR: f64 = 1e-300;
