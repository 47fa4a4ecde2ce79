//! Dense complex linear algebra and polynomial helpers shared by the estimators.

mod matrix;
mod poly;

pub use matrix::{
    block_encode, block_encode_at, identity, is_unitary, kron, max_abs_deviation, pauli_x,
    pauli_z, polar_unitary, spectral_norm, unitarity_deviation, ComplexMatrix,
};
pub use poly::{log_taylor_coefficients, log_taylor_from_poly, poly_roots, ComplexPolynomial};

/// Numerical tolerances used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max-entry deviation of `M†M` from the identity accepted for a gate.
    pub unitarity: f64,
    /// Max-entry deviation of `O - O†` accepted as Hermitian.
    pub hermitian: f64,
    /// Smallest eigenvalue accepted as positive semidefinite.
    pub psd: f64,
    /// Slack on operator norms compared against 1.
    pub norm: f64,
    /// Relative singular-value cutoff for exact MPS compression.
    pub svd_cutoff: f64,
    /// Leading polynomial coefficients below this fraction of the largest are dropped before root finding.
    pub root_trim: f64,
}

pub const TOL: Tolerances = Tolerances {
    unitarity: 1e-10,
    hermitian: 1e-10,
    psd: 1e-10,
    norm: 1e-10,
    svd_cutoff: 1e-12,
    root_trim: 1e-13,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}
