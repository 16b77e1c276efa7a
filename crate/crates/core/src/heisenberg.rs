//! Heisenberg-picture operators O⁽ᴴ⁾(t) = U(t,t₀)⁻¹ O(t) U(t,t₀), their
//! equation of motion, and expectation-value equivalence between the
//! Schrödinger and Heisenberg pictures.
//!
//! The same formulas serve both representations of a system: with the
//! Hermitian representative h and its unitary propagator u, or with the
//! original generator H and its η-unitary propagator U. Only the inner product
//! used for expectations differs, which is why the trajectory carries a
//! representation tag.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix, PropagatorGrid, StateTrajectory, TimeDependentOperator};
use crate::metric::MetricOperator;

/// Which picture the trajectory's matrices act in: `EtaRep` operators are
/// Hermitian with respect to the η(t₀) inner product, `HermitianRep` ones with
/// respect to the Euclidean inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepKind {
    EtaRep,
    HermitianRep,
}

/// A Heisenberg-picture operator sampled along a trajectory. All matrices act
/// in the initial-time space.
///
/// `times` is an explicit list rather than a grid so that multi-segment
/// evolutions can record a junction instant twice (once per side).
#[derive(Debug, Clone)]
pub struct HeisenbergTrajectory {
    pub times: Vec<f64>,
    pub ops: Vec<CMatrix>,
    pub rep: RepKind,
}

/// O⁽ᴴ⁾(t_k) = U(t_k,t₀)⁻¹ O(t_k) U(t_k,t₀) on every node of the propagator
/// grid. The first entry equals the Schrödinger-picture operator at t₀.
pub fn heisenberg_op(
    o: &TimeDependentOperator,
    u: &PropagatorGrid,
    rep: RepKind,
) -> Result<HeisenbergTrajectory> {
    if o.dim() != u.dim() {
        return Err(Error::DimensionMismatch(format!(
            "observable dimension {} vs propagator dimension {}",
            o.dim(),
            u.dim()
        )));
    }
    let samples = o.sample_on(&u.grid)?;
    let ops = (0..u.grid.len())
        .map(|k| u.backward[k].dot(&samples[k]).dot(&u.forward[k]))
        .collect();
    Ok(HeisenbergTrajectory {
        times: u.grid.times(),
        ops,
        rep,
    })
}

/// Maximum over interior nodes of
/// ‖i ∂ₜO⁽ᴴ⁾ − [O⁽ᴴ⁾, H⁽ᴴ⁾] − i U⁻¹ Ȯ U‖_max,
/// with ∂ₜO⁽ᴴ⁾ by central differences. A small value certifies the Heisenberg
/// equation of motion; `o_dot = None` means an explicitly time-independent
/// observable.
///
/// The trajectory must be uniformly sampled and aligned with the propagator
/// grid (single-segment data; junction-doubled trajectories are rejected).
pub fn heisenberg_residual(
    traj: &HeisenbergTrajectory,
    h: &TimeDependentOperator,
    u: &PropagatorGrid,
    o_dot: Option<&TimeDependentOperator>,
) -> Result<f64> {
    let n = traj.times.len();
    if n != u.grid.len() || traj.ops.len() != n {
        return Err(Error::GridMismatch(format!(
            "trajectory has {n} samples, propagator grid has {}",
            u.grid.len()
        )));
    }
    let dt = u.grid.dt();
    let slack = 1e-9 * (u.grid.t1 - u.grid.t0).abs().max(1.0);
    for k in 0..n {
        if (traj.times[k] - u.grid.time(k)).abs() > slack {
            return Err(Error::GridMismatch(format!(
                "trajectory time {} at node {k} differs from grid time {}",
                traj.times[k],
                u.grid.time(k)
            )));
        }
    }
    let h_samples = h.sample_on(&u.grid)?;
    let o_dot_samples = match o_dot {
        Some(od) => Some(od.sample_on(&u.grid)?),
        None => None,
    };
    let i = Complex64::new(0.0, 1.0);
    let half = Complex64::new(1.0 / (2.0 * dt), 0.0);
    let mut worst = 0.0f64;
    for k in 1..n - 1 {
        let fd = (&traj.ops[k + 1] - &traj.ops[k - 1]) * half;
        let hh = u.backward[k].dot(&h_samples[k]).dot(&u.forward[k]);
        let comm = traj.ops[k].dot(&hh) - hh.dot(&traj.ops[k]);
        let mut residual = fd * i - comm;
        if let Some(ods) = &o_dot_samples {
            let drive = u.backward[k].dot(&ods[k]).dot(&u.forward[k]);
            residual = residual - drive * i;
        }
        worst = worst.max(max_abs(&residual));
    }
    Ok(worst)
}

/// The same expectation value computed two ways at node `k`:
/// Schrödinger picture ⟨ψ(t), O(t) ψ(t)⟩_{η(t)} and Heisenberg picture
/// ⟨ψ₀, O⁽ᴴ⁾(t) ψ₀⟩_{η(t₀)}, both normalized. The two must agree.
pub fn expectation_equivalence(
    o: &TimeDependentOperator,
    traj: &StateTrajectory,
    metrics: &[MetricOperator],
    u: &PropagatorGrid,
    k: usize,
) -> Result<(f64, f64)> {
    let n = u.grid.len();
    if traj.states.len() != n || metrics.len() != n {
        return Err(Error::GridMismatch(format!(
            "states ({}), metrics ({}), and propagator nodes ({n}) must agree",
            traj.states.len(),
            metrics.len()
        )));
    }
    if !traj.grid.aligned_with(&u.grid) {
        return Err(Error::GridMismatch(
            "state trajectory grid differs from propagator grid".into(),
        ));
    }
    if k >= n {
        return Err(Error::InvalidGrid(format!("node {k} out of range 0..{n}")));
    }
    let ot = o.eval(u.grid.time(k));
    let schrodinger = metrics[k].expectation(&ot, &traj.states[k])?;
    let oh = u.backward[k].dot(&ot).dot(&u.forward[k]);
    let heisenberg = metrics[0].expectation(&oh, &traj.states[0])?;
    Ok((schrodinger.re, heisenberg.re))
}
