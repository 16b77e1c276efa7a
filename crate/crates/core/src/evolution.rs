//! Time-dependent metrics and the two equivalent representations of one
//! evolving system.
//!
//! Given a (generally non-Hermitian) generator H(t) and a seed metric η₀, the
//! evolution operator U(t, t₀) of i ∂_t U = H U is unitary as a map between
//! the inner-product spaces (η₀ at t₀) and (η(t) at t) precisely when
//!
//!   η(t) = (U†)⁻¹ η₀ U⁻¹.
//!
//! Pointwise, that is equivalent to the vanishing of the residual
//! ‖H♯ − H − i η⁻¹ η̇‖, which [`unitarity_residual`] measures. The square root
//! ρ(t) = η(t)^{1/2} maps the whole picture to an ordinary Hermitian one:
//! h(t) = ρ H ρ⁻¹ + i ρ̇ ρ⁻¹ is Hermitian, and the energy observable in the
//! original picture is H_E = ρ⁻¹ h ρ, which differs from the Schrödinger
//! generator H by the connection-like term −i ρ⁻¹ ρ̇.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, evolve_state, hermiticity_residual, identity, matrix_exp, max_abs, propagate_grid,
    time_derivatives, CMatrix, CVector, StateTrajectory, TimeDependentOperator, UniformGrid,
};
use crate::metric::{pseudo_adjoint, MetricOperator};
use crate::tol;

use ndarray_linalg::Inverse;

/// Hermiticity threshold separating structural failures (wrong metric for the
/// generator) from finite-difference noise in time-derivative terms. Grid
/// noise sits orders of magnitude below this on any usable grid; a metric that
/// does not solve the unitarity condition overshoots it by orders of
/// magnitude.
const STRUCTURAL_HERMITICITY: f64 = 1e-3;

const MINUS_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };
const PLUS_I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// The metric at time `t` that makes evolution under `h` from the seed metric
/// unitary: η(t) = W† η₀ W with W = U(t₀, t) accumulated step-by-step (never
/// by inverting U). At `t = t0` the seed is returned unchanged.
pub fn dynamical_metric(
    h: &TimeDependentOperator,
    eta0: &MetricOperator,
    t: f64,
    steps: usize,
) -> Result<MetricOperator> {
    if h.dim() != eta0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} vs metric dimension {}",
            h.dim(),
            eta0.dim()
        )));
    }
    if t == h.t0() {
        return Ok(eta0.clone());
    }
    let grid = UniformGrid::new(h.t0(), t, steps)?;
    if !h.covers(grid.t0, grid.t1) {
        return Err(Error::GridMismatch(format!(
            "time {t} outside operator domain [{}, {}]",
            h.t0(),
            h.t1()
        )));
    }
    let mut w = identity(h.dim());
    for k in 0..steps {
        let hm = h.eval(grid.mid(k));
        w = w.dot(&matrix_exp(&(&hm * Complex64::new(0.0, grid.dt()))));
    }
    MetricOperator::new(&adjoint(&w).dot(&eta0.eta).dot(&w))
}

/// [`dynamical_metric`] on every node of a grid, sharing one propagator sweep.
pub fn dynamical_metric_grid(
    h: &TimeDependentOperator,
    eta0: &MetricOperator,
    grid: UniformGrid,
) -> Result<Vec<MetricOperator>> {
    if h.dim() != eta0.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} vs metric dimension {}",
            h.dim(),
            eta0.dim()
        )));
    }
    let pg = propagate_grid(h, grid)?;
    pg.backward
        .iter()
        .map(|w| MetricOperator::new(&adjoint(w).dot(&eta0.eta).dot(w)))
        .collect()
}

/// ‖H♯ − H − i η⁻¹ η̇‖_max: zero exactly when evolution under H through the
/// instantaneous metric η(t) is norm-preserving at this instant.
pub fn unitarity_residual(h: &CMatrix, metric: &MetricOperator, eta_dot: &CMatrix) -> f64 {
    let sharp = pseudo_adjoint(h, metric);
    let drift = metric.eta_inv.dot(eta_dot) * PLUS_I;
    max_abs(&(&sharp - h - &drift))
}

/// [`unitarity_residual`] at every node, with η̇ from second-order finite
/// differences of the metric samples.
pub fn unitarity_residual_series(
    h: &TimeDependentOperator,
    metrics: &[MetricOperator],
    grid: UniformGrid,
) -> Result<Vec<f64>> {
    if metrics.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} metric samples for {} grid nodes",
            metrics.len(),
            grid.len()
        )));
    }
    let h_samples = h.sample_on(&grid)?;
    let eta_samples: Vec<CMatrix> = metrics.iter().map(|m| m.eta.clone()).collect();
    let eta_dots = time_derivatives(&eta_samples, grid.dt())?;
    Ok((0..grid.len())
        .map(|k| unitarity_residual(&h_samples[k], &metrics[k], &eta_dots[k]))
        .collect())
}

/// Maximum of [`unitarity_residual_series`] over interior nodes; the endpoint
/// stencils are one-sided and noisier, so they are excluded from the max.
pub fn unitarity_residual_max(
    h: &TimeDependentOperator,
    metrics: &[MetricOperator],
    grid: UniformGrid,
) -> Result<f64> {
    let series = unitarity_residual_series(h, metrics, grid)?;
    Ok(series[1..series.len() - 1]
        .iter()
        .cloned()
        .fold(0.0, f64::max))
}

/// The Hermitian representative h(t) = ρ H ρ⁻¹ + i ρ̇ ρ⁻¹ sampled on the grid.
///
/// Fails with `NotHermitianOutput` when a sample is far from Hermitian, which
/// signals that the supplied metrics do not solve the unitarity condition for
/// this generator. Samples are returned unsymmetrized so callers can measure
/// the actual Hermiticity residual.
pub fn hermitian_rep(
    h: &TimeDependentOperator,
    metrics: &[MetricOperator],
    grid: UniformGrid,
) -> Result<TimeDependentOperator> {
    if metrics.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} metric samples for {} grid nodes",
            metrics.len(),
            grid.len()
        )));
    }
    let h_samples = h.sample_on(&grid)?;
    let rho_samples: Vec<CMatrix> = metrics.iter().map(|m| m.rho.clone()).collect();
    let rho_dots = time_derivatives(&rho_samples, grid.dt())?;
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let sample = metrics[k].rho.dot(&h_samples[k]).dot(&metrics[k].rho_inv)
            + rho_dots[k].dot(&metrics[k].rho_inv) * PLUS_I;
        let res = hermiticity_residual(&sample);
        if res > STRUCTURAL_HERMITICITY * max_abs(&sample).max(1.0) {
            return Err(Error::NotHermitianOutput { residual: res });
        }
        out.push(sample);
    }
    TimeDependentOperator::sampled(grid, out)
}

/// The energy observable in the original picture: H_E = ρ⁻¹ h ρ.
pub fn energy_operator(h: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    Ok(rho.inv()?.dot(h).dot(rho))
}

/// The covariant-derivative term −i ρ⁻¹ ρ̇ at every node, with ρ̇ from
/// second-order finite differences.
///
/// These samples are exactly the difference between the Schrödinger generator
/// and the energy operator; [`solve_modified_schrodinger`] adds them to the
/// energy samples, and chart-based evolutions that wrap the same arrays
/// reproduce its trajectories bit for bit.
pub fn connection_term_samples(rho_samples: &[CMatrix], dt: f64) -> Result<Vec<CMatrix>> {
    let rho_dots = time_derivatives(rho_samples, dt)?;
    rho_samples
        .iter()
        .zip(rho_dots.iter())
        .map(|(rho, rho_dot)| Ok(rho.inv()?.dot(rho_dot) * MINUS_I))
        .collect()
}

/// Integrate i (∂_t + ρ⁻¹ρ̇) ψ = H_E ψ: the Schrödinger generator is
/// H_E − i ρ⁻¹ ρ̇, assembled per node and fed to the shared midpoint kernel.
///
/// The trajectory equals ρ(t)⁻¹ u(t, t₀) ρ(t₀) ψ₀ where u propagates the
/// Hermitian representative h = ρ H_E ρ⁻¹.
pub fn solve_modified_schrodinger(
    h_energy: &TimeDependentOperator,
    rho_samples: &[CMatrix],
    psi0: &CVector,
    grid: UniformGrid,
) -> Result<StateTrajectory> {
    if rho_samples.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} square-root-metric samples for {} grid nodes",
            rho_samples.len(),
            grid.len()
        )));
    }
    let energy = h_energy.sample_on(&grid)?;
    let conn = connection_term_samples(rho_samples, grid.dt())?;
    let gen_samples: Vec<CMatrix> = energy
        .iter()
        .zip(conn.iter())
        .map(|(e, c)| e + c)
        .collect();
    let gen = TimeDependentOperator::sampled(grid, gen_samples)?;
    evolve_state(&gen, psi0, grid)
}

/// A system carried in both pictures on one grid: the generator H(t) with its
/// dynamical metrics, and the Hermitian representative h(t).
#[derive(Clone)]
pub struct RepresentationPair {
    pub grid: UniformGrid,
    pub hamiltonian: TimeDependentOperator,
    pub metrics: Vec<MetricOperator>,
    pub hermitian: TimeDependentOperator,
}

impl RepresentationPair {
    /// Build both pictures from a generator and a seed metric; the
    /// construction guarantees h(t) = ρ H ρ⁻¹ + i ρ̇ ρ⁻¹ on every node.
    pub fn build(
        h: &TimeDependentOperator,
        eta0: &MetricOperator,
        grid: UniformGrid,
    ) -> Result<Self> {
        let metrics = dynamical_metric_grid(h, eta0, grid)?;
        let hermitian = hermitian_rep(h, &metrics, grid)?;
        Ok(Self {
            grid,
            hamiltonian: h.clone(),
            metrics,
            hermitian,
        })
    }
}

/// Change of representation by a time-dependent unitary 𝒰: states map as 𝒰ψ,
/// observables as 𝒰 o 𝒰⁻¹, and the Hamiltonian picks up the extra derivative
/// term: 𝒰 h 𝒰⁻¹ + i 𝒰̇ 𝒰⁻¹.
///
/// After the unitarity gate, 𝒰⁻¹ is taken as 𝒰†.
pub fn canonical_transform(
    state: &CVector,
    obs: &CMatrix,
    ham: &CMatrix,
    u: &CMatrix,
    u_dot: &CMatrix,
) -> Result<(CVector, CMatrix, CMatrix)> {
    let n = u.nrows();
    let residual = max_abs(&(adjoint(u).dot(u) - identity(n)));
    if residual > tol::TRANSITION {
        return Err(Error::NotUnitary { residual });
    }
    let uh = adjoint(u);
    let new_state = u.dot(state);
    let new_obs = u.dot(obs).dot(&uh);
    let new_ham = u.dot(ham).dot(&uh) + u_dot.dot(&uh) * PLUS_I;
    Ok((new_state, new_obs, new_ham))
}
