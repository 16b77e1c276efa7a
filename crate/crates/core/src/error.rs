//! Error type shared by the whole crate.

use thiserror::Error;

/// Everything that can go wrong in this crate.
///
/// Numerical gates (Hermiticity, positivity, diagonalizability, unitarity) carry
/// the offending residual or witness so callers can report *how far* an input was
/// from the required structure, not just that it failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite matrix or vector entry")]
    NonFinite,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids are not aligned: {0}")]
    GridMismatch(String),

    #[error("matrix is not diagonalizable within tolerance (eigenvector condition number {cond:.3e})")]
    NonDiagonalizable { cond: f64 },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("spectrum is not real (largest |Im λ| = {max_imag:.3e})")]
    ComplexSpectrum { max_imag: f64 },

    #[error("operator is not pseudo-Hermitian for the given metric (residual {residual:.3e})")]
    NotPseudoHermitian { residual: f64 },

    #[error("computed representative is not Hermitian (residual {residual:.3e}); the metric is inconsistent with the dynamics")]
    NotHermitianOutput { residual: f64 },

    #[error("transformation is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("transition does not preserve the fiber metric (residual {residual:.3e})")]
    NotUnitaryTransition { residual: f64 },

    #[error("energy section is not pseudo-Hermitian at R = {point:?} (residual {residual:.3e})")]
    SectionNotPseudoHermitian { point: Vec<f64>, residual: f64 },

    #[error("gradient unavailable: {0}")]
    MissingGradient(String),

    #[error("no transition map from chart '{from}' to chart '{to}'")]
    MissingTransition { from: String, to: String },

    #[error("unknown chart '{0}'")]
    UnknownChart(String),

    #[error("gauge field is singular at R = {point:?}")]
    SingularGauge { point: Vec<f64> },

    #[error("zero state has no expectation value")]
    ZeroState,

    #[error("linear-algebra backend error: {0}")]
    Backend(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
