//! Dynamics of finite-dimensional quantum systems whose inner product is itself
//! dynamical.
//!
//! The library covers three layers:
//!
//! * **Metric calculus** ([`metric`]): Hermitian positive-definite metric operators
//!   η, the η-inner product, pseudo-adjoints H♯ = η⁻¹H†η, metrics assembled from
//!   biorthonormal eigensystems, and the Hermitian representative h = ρHρ⁻¹ of a
//!   quasi-Hermitian operator (ρ = η^{1/2}).
//! * **Evolution** ([`evolution`], [`heisenberg`]): midpoint-exponential propagation,
//!   the dynamical metric η(t) = (U†)⁻¹η₀U⁻¹ that keeps evolution unitary in the
//!   η-inner product, the time-dependent Hermitian representative
//!   h = ρHρ⁻¹ + iρ̇ρ⁻¹, the energy operator H_E = ρ⁻¹hρ, the modified Schrödinger
//!   equation i(∂_t + ρ⁻¹ρ̇)ψ = H_Eψ, and Heisenberg-picture trajectories
//!   O⁽ᴴ⁾(t) = U⁻¹O(t)U with their defect residuals.
//! * **Bundle geometry** ([`bundle`]): charts of a Hermitian vector bundle over a
//!   classical parameter space — fiber metric field η(R), local connection
//!   one-form A_a(R), parallel transport, gauge and patch transformations, and
//!   evolution along curves that cross chart boundaries.
//!
//! [`systems`] ships two closed-form reference systems (a 2×2 non-Hermitian model
//! and a parity-driven oscillator truncation) plus a two-chart example bundle;
//! they back most integration tests.
//!
//! Everything is dense, double-precision, and sized for desk-scale studies
//! (dimensions up to a few hundred).

pub mod bundle;
pub mod error;
pub mod evolution;
pub mod heisenberg;
pub mod linalg;
pub mod metric;
pub mod systems;
pub mod tol;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector};
