use thiserror::Error;

/// Errors raised by the linear-algebra kernel, the map representations and
/// the solvers built on top of them.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (anti-Hermitian part {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("map is not completely positive (minimum Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("operator norm {norm:.12} exceeds 1: not a contraction")]
    ContractionViolation { norm: f64 },

    #[error("dilations do not describe the same map (residual {residual:.3e})")]
    NotSameMap { residual: f64 },

    #[error("operator is not a dilation of the given map (residual {residual:.3e})")]
    InvalidDilation { residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dominance violated: weight {leak:.3e} outside the reference support")]
    Dominance { leak: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("solver did not converge after {iterations} iterations (gap {gap:.3e})")]
    NoConvergence {
        iterations: usize,
        gap: f64,
        best: Option<Box<crate::sdp::SdpSolution>>,
    },

    #[error("problem appears infeasible or unbounded: {0}")]
    Infeasible(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
