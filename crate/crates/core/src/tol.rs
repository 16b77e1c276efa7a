//! Central numerical tolerances.
//!
//! Structural gates (Hermiticity, positivity) are *relative*: a residual is
//! compared against `tol * max(1, scale)` where `scale` is a magnitude
//! characteristic of the input. Propagation accuracy is what a second-order
//! stepper delivers on desk-scale grids.

/// Relative Hermiticity tolerance for structural validation.
pub const HERMITICITY: f64 = 1e-9;

/// Relative positivity floor: eigenvalues of a metric must exceed
/// `POSITIVITY * max(1, λ_max)`.
pub const POSITIVITY: f64 = 1e-9;

/// Default accuracy expected of propagated quantities in tests and checks.
pub const PROPAGATION: f64 = 1e-6;

/// Eigenvector-matrix condition number above which a matrix is treated as
/// non-diagonalizable.
pub const COND_CAP: f64 = 1e12;

/// Relative step for central finite differences over classical parameters.
pub const FD_STEP: f64 = 1e-5;

/// Residual cap for metric-compatibility of transition maps (g†η̃g = η).
pub const TRANSITION: f64 = 1e-8;

/// Residual cap for pseudo-Hermiticity of energy sections along a curve.
pub const SECTION: f64 = 1e-8;
