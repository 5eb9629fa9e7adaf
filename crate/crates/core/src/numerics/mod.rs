//! Dense complex linear algebra: matrices, Hermitian spectral calculus,
//! singular values and the real kernel used by the SDP engine.

pub mod hermitian;
pub mod matrix;
pub mod real;
pub mod svd;

pub use hermitian::{
    eigh, psd_inv_sqrt, psd_sqrt, spectral_projector, Eigh, HermitianMatrix, HERMITICITY_TOL,
    PSD_CLIP, PSD_REJECT,
};
pub use matrix::{c64, ComplexMatrix, C64};
pub use real::{sym_eigen, RealMatrix};
pub use svd::{operator_norm, polar_unitary_part, singular_values, svd, trace_norm, Svd};

/// Partial trace over the first tensor factor of a (dim_a·dim_b)-square matrix.
pub fn partial_trace_first(
    m: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
) -> crate::Result<ComplexMatrix> {
    m.partial_trace_first(dim_a, dim_b)
}
