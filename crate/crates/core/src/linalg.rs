//! Dense complex linear algebra: adjoints, biorthonormal eigensystems, the
//! principal square root, the matrix exponential, and midpoint-exponential
//! propagation of time-dependent generators.
//!
//! Propagation convention: one step advances the propagator by
//! `U ← exp(−i Δt H(t + Δt/2)) · U`, which is second-order accurate and maps a
//! single exact exponential per step (so each step is exactly unitary whenever
//! the sampled generator is Hermitian). Inverse propagators are accumulated the
//! same way from the inverse step exponentials instead of by matrix inversion.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse, SVD};
use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tol;

pub type CMatrix = Array2<Complex64>;
pub type CVector = Array1<Complex64>;

/// Real scalar as a complex number.
#[inline]
pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Identity matrix.
pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

/// Conjugate transpose.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Largest entry magnitude; the residual norm used throughout.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry magnitude of a vector.
pub fn max_abs_vec(v: &CVector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// ‖m − m†‖_max: distance from Hermiticity.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - &adjoint(m)))
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_finite_vec(v: &CVector) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

// ---------------------------------------------------------------------------
// Eigensystems
// ---------------------------------------------------------------------------

/// Eigendecomposition with a biorthonormal left/right pair.
///
/// Columns of `right` are right eigenvectors (H r_n = λ_n r_n), columns of
/// `left` are left eigenvectors (H† l_n = λ̄_n l_n), scaled so that
/// `left† · right = I` exactly up to the accuracy of one LU inversion.
/// `cond` is the 2-norm condition number of the right eigenvector matrix; it is
/// the diagnostic for near-degenerate (defective) inputs.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: CVector,
    pub right: CMatrix,
    pub left: CMatrix,
    pub cond: f64,
}

impl EigenSystem {
    /// Build the biorthonormal system from eigenvalues and right eigenvectors.
    ///
    /// Rejects eigenvector matrices with 2-norm condition number above
    /// [`tol::COND_CAP`]: such inputs are numerically defective and no reliable
    /// left system exists.
    pub fn from_right(values: CVector, right: CMatrix) -> Result<Self> {
        let n = ensure_square(&right)?;
        ensure_finite(&right)?;
        if values.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues for a {n}×{n} eigenvector matrix",
                values.len()
            )));
        }
        let (_, sv, _) = right.svd(false, false)?;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !cond.is_finite() || cond > tol::COND_CAP {
            return Err(Error::NonDiagonalizable { cond });
        }
        // Rows of right⁻¹ are the left row-eigenvectors; stacking their
        // adjoints as columns gives left with left† right = I.
        let left = adjoint(&right.inv().map_err(|_| Error::NonDiagonalizable { cond })?);
        Ok(Self {
            values,
            right,
            left,
            cond,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Full (non-Hermitian) eigendecomposition with the biorthonormal left system.
pub fn eigen(m: &CMatrix) -> Result<EigenSystem> {
    ensure_square(m)?;
    ensure_finite(m)?;
    let (values, right) = m.eig()?;
    EigenSystem::from_right(values, right)
}

// ---------------------------------------------------------------------------
// Principal square root / matrix exponential
// ---------------------------------------------------------------------------

/// Hermitian eigendecomposition with the eigenvector orientation fixed up:
/// some LAPACK bindings hand back the eigenvectors of the memory-transposed
/// (i.e. conjugated) matrix for complex row-major input, so the factorization
/// is checked by reconstruction and the conjugated basis is chosen when it
/// closes better. Input must already be Hermitian.
pub(crate) fn eigh_decomp(m: &CMatrix) -> Result<(Array1<f64>, CMatrix)> {
    use ndarray_linalg::{Eigh, UPLO};
    let (w, v) = m.eigh(UPLO::Lower)?;
    let direct = hermitian_function(&v, &w, |x| x);
    let vc = v.mapv(|z| z.conj());
    let conjugated = hermitian_function(&vc, &w, |x| x);
    if max_abs(&(&conjugated - m)) < max_abs(&(&direct - m)) {
        Ok((w, vc))
    } else {
        Ok((w, v))
    }
}

/// Principal square root of a Hermitian positive-definite matrix,
/// via the Hermitian eigendecomposition of the symmetrized input.
pub fn principal_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let _ = ensure_square(m)?;
    ensure_finite(m)?;
    let scale = max_abs(m).max(1.0);
    let res = hermiticity_residual(m);
    if res > tol::HERMITICITY * scale {
        return Err(Error::NotHermitian { residual: res });
    }
    let sym = (m + &adjoint(m)).mapv(|z| z * 0.5);
    let (w, v) = eigh_decomp(&sym)?;
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let floor = tol::POSITIVITY * wmax.max(1.0);
    if let Some(&min_eig) = w.iter().find(|&&x| x <= floor) {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    Ok(hermitian_function(&v, &w, f64::sqrt))
}

/// Assemble v · diag(f(w)) · v† for a Hermitian eigendecomposition (w, v).
pub(crate) fn hermitian_function(v: &CMatrix, w: &Array1<f64>, f: impl Fn(f64) -> f64) -> CMatrix {
    let d = Array2::from_diag(&w.mapv(|x| cr(f(x))));
    v.dot(&d).dot(&adjoint(v))
}

/// 1-norm (maximum column sum), used to pick the exponential scaling power.
fn one_norm(m: &CMatrix) -> f64 {
    let mut best = 0.0f64;
    for col in m.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Padé(13) coefficients (numerator; the denominator uses alternating signs).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the Padé(13) approximant is accurate to double
/// precision without scaling.
const PADE13_THETA: f64 = 5.371920351148152;

/// Matrix exponential by scaling-and-squaring with a Padé(13) approximant.
pub fn matrix_exp(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix_exp requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    if n == 1 {
        let mut out = Array2::zeros((1, 1));
        out[[0, 0]] = m[[0, 0]].exp();
        return out;
    }

    let norm = one_norm(m);
    let s = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m.mapv(|z| z / cr((1u64 << s) as f64));

    let mut r = pade13(&scaled);
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

fn pade13(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let eye = identity(n);
    let b = PADE13;

    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    // u = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let w1 = &a6 * cr(b[13]) + &a4 * cr(b[11]) + &a2 * cr(b[9]);
    let w = a6.dot(&w1) + &a6 * cr(b[7]) + &a4 * cr(b[5]) + &a2 * cr(b[3]) + &eye * cr(b[1]);
    let u = a.dot(&w);

    // v = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let z1 = &a6 * cr(b[12]) + &a4 * cr(b[10]) + &a2 * cr(b[8]);
    let v = a6.dot(&z1) + &a6 * cr(b[6]) + &a4 * cr(b[4]) + &a2 * cr(b[2]) + &eye * cr(b[0]);

    let denom = &v - &u;
    let numer = &v + &u;
    denom
        .inv()
        .expect("Padé denominator is nonsingular for a properly scaled argument")
        .dot(&numer)
}

// ---------------------------------------------------------------------------
// Grids and time-dependent operators
// ---------------------------------------------------------------------------

/// Uniform time grid over [t0, t1] with `steps` intervals (`steps + 1` nodes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl UniformGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidGrid("non-finite endpoint".into()));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("steps must be ≥ 1".into()));
        }
        if t1 <= t0 {
            return Err(Error::InvalidGrid(format!("need t1 > t0, got [{t0}, {t1}]")));
        }
        Ok(Self { t0, t1, steps })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    /// Number of nodes (steps + 1).
    #[inline]
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node time; the final node is exactly `t1`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        debug_assert!(k <= self.steps);
        if k == self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    /// Midpoint of interval k.
    #[inline]
    pub fn mid(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// True when two grids coincide up to roundoff slack.
    pub fn aligned_with(&self, other: &UniformGrid) -> bool {
        let span = (self.t1 - self.t0).abs().max(1.0);
        self.steps == other.steps
            && (self.t0 - other.t0).abs() <= 1e-9 * span
            && (self.t1 - other.t1).abs() <= 1e-9 * span
    }
}

#[derive(Clone)]
enum Source {
    Analytic(Arc<dyn Fn(f64) -> CMatrix + Send + Sync>),
    Sampled {
        grid: UniformGrid,
        samples: Arc<Vec<CMatrix>>,
    },
}

/// A map t ↦ matrix on a closed interval: either a closed form or uniform-grid
/// samples with linear interpolation between nodes.
///
/// Node evaluation of a sampled operator returns the stored sample verbatim —
/// never a recomputation — so computations that share a grid see identical
/// floating-point data.
#[derive(Clone)]
pub struct TimeDependentOperator {
    t0: f64,
    t1: f64,
    dim: usize,
    source: Source,
}

impl TimeDependentOperator {
    /// Closed-form operator on [t0, t1].
    pub fn analytic<F>(t0: f64, t1: f64, dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        assert!(t1 > t0, "empty time domain [{t0}, {t1}]");
        Self {
            t0,
            t1,
            dim,
            source: Source::Analytic(Arc::new(f)),
        }
    }

    /// Constant operator on [t0, t1].
    pub fn constant(t0: f64, t1: f64, m: CMatrix) -> Self {
        let dim = m.nrows();
        assert_eq!(dim, m.ncols(), "constant operator must be square");
        Self::analytic(t0, t1, dim, move |_| m.clone())
    }

    /// Operator sampled on a uniform grid (one sample per node).
    pub fn sampled(grid: UniformGrid, samples: Vec<CMatrix>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid with {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        let dim = ensure_square(&samples[0])?;
        for s in &samples {
            if s.nrows() != dim || s.ncols() != dim {
                return Err(Error::DimensionMismatch(
                    "inconsistent sample dimensions".into(),
                ));
            }
            ensure_finite(s)?;
        }
        Ok(Self {
            t0: grid.t0,
            t1: grid.t1,
            dim,
            source: Source::Sampled {
                grid,
                samples: Arc::new(samples),
            },
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when [a, b] lies inside this operator's domain (with roundoff slack).
    pub fn covers(&self, a: f64, b: f64) -> bool {
        let slack = 1e-9 * (self.t1 - self.t0).abs().max(1.0);
        a >= self.t0 - slack && b <= self.t1 + slack
    }

    /// Evaluate at time t.
    ///
    /// Panics when t lies outside the domain (beyond roundoff slack); callers
    /// validate domains up front via [`Self::covers`].
    pub fn eval(&self, t: f64) -> CMatrix {
        assert!(
            self.covers(t, t),
            "evaluation at t = {t} outside domain [{}, {}]",
            self.t0,
            self.t1
        );
        match &self.source {
            Source::Analytic(f) => f(t),
            Source::Sampled { grid, samples } => {
                let u = (t - grid.t0) / grid.dt();
                let k = (u.floor() as isize).clamp(0, grid.steps as isize - 1) as usize;
                let frac = u - k as f64;
                if frac.abs() <= 1e-9 {
                    samples[k].clone()
                } else if (frac - 1.0).abs() <= 1e-9 {
                    samples[k + 1].clone()
                } else {
                    &samples[k] * cr(1.0 - frac) + &samples[k + 1] * cr(frac)
                }
            }
        }
    }

    /// Samples on `grid`. A sampled operator must already live on an aligned
    /// grid — no silent resampling.
    pub fn sample_on(&self, grid: &UniformGrid) -> Result<Vec<CMatrix>> {
        match &self.source {
            Source::Sampled {
                grid: own,
                samples,
            } => {
                if own.aligned_with(grid) {
                    Ok(samples.as_ref().clone())
                } else {
                    Err(Error::GridMismatch(format!(
                        "operator sampled on [{}, {}] with {} steps, requested [{}, {}] with {} steps",
                        own.t0, own.t1, own.steps, grid.t0, grid.t1, grid.steps
                    )))
                }
            }
            Source::Analytic(_) => {
                if !self.covers(grid.t0, grid.t1) {
                    return Err(Error::GridMismatch(format!(
                        "grid [{}, {}] outside operator domain [{}, {}]",
                        grid.t0, grid.t1, self.t0, self.t1
                    )));
                }
                Ok((0..grid.len()).map(|k| self.eval(grid.time(k))).collect())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

/// One forward step exponential exp(−i Δt H(t_mid)).
fn step_exp(h: &TimeDependentOperator, grid: &UniformGrid, k: usize) -> CMatrix {
    let hm = h.eval(grid.mid(k));
    matrix_exp(&(&hm * Complex64::new(0.0, -grid.dt())))
}

/// One inverse step exponential exp(+i Δt H(t_mid)).
fn step_exp_inv(h: &TimeDependentOperator, grid: &UniformGrid, k: usize) -> CMatrix {
    let hm = h.eval(grid.mid(k));
    matrix_exp(&(&hm * Complex64::new(0.0, grid.dt())))
}

/// Propagator U(t1, t0) of i ∂_t U = H(t) U by midpoint-exponential stepping.
/// `U(t0, t0)` is exactly the identity.
pub fn propagate(h: &TimeDependentOperator, t0: f64, t1: f64, steps: usize) -> Result<CMatrix> {
    if t1 == t0 {
        return Ok(identity(h.dim()));
    }
    let grid = UniformGrid::new(t0, t1, steps)?;
    if !h.covers(t0, t1) {
        return Err(Error::GridMismatch(format!(
            "propagation window [{t0}, {t1}] outside operator domain [{}, {}]",
            h.t0(),
            h.t1()
        )));
    }
    let mut u = identity(h.dim());
    for k in 0..steps {
        u = step_exp(h, &grid, k).dot(&u);
    }
    Ok(u)
}

/// Forward and inverse propagators on every node of a grid.
///
/// `forward[k] = U(t_k, t0)` and `backward[k] = U(t0, t_k)`; the inverse chain
/// is accumulated from inverse step exponentials, not by inverting `forward`.
#[derive(Debug, Clone)]
pub struct PropagatorGrid {
    pub grid: UniformGrid,
    pub forward: Vec<CMatrix>,
    pub backward: Vec<CMatrix>,
}

impl PropagatorGrid {
    /// Wrap an externally supplied forward sequence, inverting each entry by LU
    /// solves. `u[0]` must be the identity.
    pub fn from_samples(grid: UniformGrid, u: Vec<CMatrix>) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} propagator samples for {} nodes",
                u.len(),
                grid.len()
            )));
        }
        let n = ensure_square(&u[0])?;
        let id_res = max_abs(&(&u[0] - &identity(n)));
        if id_res > 1e-9 {
            return Err(Error::NotUnitary { residual: id_res });
        }
        let mut backward = Vec::with_capacity(u.len());
        for m in &u {
            backward.push(m.inv()?);
        }
        Ok(Self {
            grid,
            forward: u,
            backward,
        })
    }

    pub fn dim(&self) -> usize {
        self.forward[0].nrows()
    }
}

/// Propagators on every node of `grid`, both directions.
pub fn propagate_grid(h: &TimeDependentOperator, grid: UniformGrid) -> Result<PropagatorGrid> {
    if !h.covers(grid.t0, grid.t1) {
        return Err(Error::GridMismatch(format!(
            "grid [{}, {}] outside operator domain [{}, {}]",
            grid.t0,
            grid.t1,
            h.t0(),
            h.t1()
        )));
    }
    let n = h.dim();
    let mut forward = Vec::with_capacity(grid.len());
    let mut backward = Vec::with_capacity(grid.len());
    forward.push(identity(n));
    backward.push(identity(n));
    for k in 0..grid.steps {
        let f = step_exp(h, &grid, k).dot(&forward[k]);
        let b = backward[k].dot(&step_exp_inv(h, &grid, k));
        forward.push(f);
        backward.push(b);
    }
    Ok(PropagatorGrid {
        grid,
        forward,
        backward,
    })
}

/// A state sampled on every node of a grid.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub grid: UniformGrid,
    pub states: Vec<CVector>,
}

/// Integrate i ∂_t ψ = G(t) ψ with the shared midpoint-exponential kernel.
pub fn evolve_state(
    gen: &TimeDependentOperator,
    psi0: &CVector,
    grid: UniformGrid,
) -> Result<StateTrajectory> {
    if psi0.len() != gen.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state length {} vs operator dimension {}",
            psi0.len(),
            gen.dim()
        )));
    }
    ensure_finite_vec(psi0)?;
    if !gen.covers(grid.t0, grid.t1) {
        return Err(Error::GridMismatch(format!(
            "grid [{}, {}] outside operator domain [{}, {}]",
            grid.t0,
            grid.t1,
            gen.t0(),
            gen.t1()
        )));
    }
    let mut states = Vec::with_capacity(grid.len());
    states.push(psi0.clone());
    for k in 0..grid.steps {
        let next = step_exp(gen, &grid, k).dot(&states[k]);
        states.push(next);
    }
    Ok(StateTrajectory { grid, states })
}

// ---------------------------------------------------------------------------
// Finite differences in time
// ---------------------------------------------------------------------------

/// Second-order time derivatives of a uniformly sampled matrix sequence:
/// central differences inside, one-sided three-point stencils at the ends.
pub fn time_derivatives(samples: &[CMatrix], dt: f64) -> Result<Vec<CMatrix>> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 samples for second-order derivatives, got {n}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidGrid(format!("bad step {dt}")));
    }
    let h2 = cr(1.0 / (2.0 * dt));
    let mut out = Vec::with_capacity(n);
    out.push((&samples[1] * cr(4.0) - &samples[2] - &samples[0] * cr(3.0)) * h2);
    for k in 1..n - 1 {
        out.push((&samples[k + 1] - &samples[k - 1]) * h2);
    }
    out.push((&samples[n - 1] * cr(3.0) - &samples[n - 2] * cr(4.0) + &samples[n - 3]) * h2);
    Ok(out)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// The 2×2 reference generator ε·[[0, 1], [4, 0]].
    fn two_level(eps: f64) -> CMatrix {
        array![[c(0.0, 0.0), c(eps, 0.0)], [c(4.0 * eps, 0.0), c(0.0, 0.0)]]
    }

    #[test]
    fn adjoint_swaps_and_conjugates() {
        let m = array![[c(1.0, 2.0), c(3.0, -1.0)], [c(0.0, 5.0), c(-2.0, 0.5)]];
        let a = adjoint(&m);
        assert_eq!(a[[0, 1]], c(0.0, -5.0));
        assert_eq!(a[[1, 0]], c(3.0, 1.0));
        assert_eq!(a[[0, 0]], c(1.0, -2.0));
        // involution
        assert_eq!(max_abs(&(&adjoint(&a) - &m)), 0.0);
    }

    #[test]
    fn eigen_two_level_pair() {
        let eps = 0.7;
        let es = eigen(&two_level(eps)).unwrap();
        let mut re: Vec<f64> = es.values.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0 * eps).abs() < 1e-12);
        assert!((re[1] - 2.0 * eps).abs() < 1e-12);
        for z in es.values.iter() {
            assert!(z.im.abs() < 1e-12);
        }
        // biorthonormality and the eigen-residual
        let n = es.dim();
        let bi = adjoint(&es.left).dot(&es.right);
        assert!(max_abs(&(&bi - &identity(n))) < 1e-10);
        let lam = Array2::from_diag(&es.values);
        let res = two_level(eps).dot(&es.right) - es.right.dot(&lam);
        assert!(max_abs(&res) < 1e-10);
    }

    #[test]
    fn eigen_diagonal_passthrough() {
        let m = array![[c(2.0, 1.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        let es = eigen(&m).unwrap();
        let mut vals: Vec<Complex64> = es.values.to_vec();
        vals.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((vals[0] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((vals[1] - c(2.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn eigen_similarity_oracle() {
        // m = S diag(λ) S⁻¹ with a fixed well-conditioned S: the spectrum is
        // known by construction.
        let s = array![
            [c(1.0, 0.0), c(0.3, 0.1), c(0.0, -0.2), c(0.1, 0.0)],
            [c(0.0, 0.4), c(1.0, 0.0), c(0.2, 0.0), c(-0.1, 0.1)],
            [c(0.2, 0.0), c(0.0, 0.1), c(1.0, 0.0), c(0.3, -0.3)],
            [c(-0.1, 0.0), c(0.2, -0.2), c(0.0, 0.1), c(1.0, 0.0)],
        ];
        let lam = [c(0.5, 0.0), c(-1.25, 0.0), c(2.0, 0.0), c(3.5, 0.0)];
        let d = Array2::from_diag(&Array1::from(lam.to_vec()));
        let m = s.dot(&d).dot(&s.inv().unwrap());
        let es = eigen(&m).unwrap();
        let mut got: Vec<f64> = es.values.iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = lam.iter().map(|z| z.re).collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "got {g}, want {w}");
        }
        for z in es.values.iter() {
            assert!(z.im.abs() < 1e-9);
        }
    }

    #[test]
    fn eigen_rejects_jordan_block() {
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        match eigen(&m) {
            Err(Error::NonDiagonalizable { cond }) => assert!(cond > tol::COND_CAP),
            other => panic!("expected NonDiagonalizable, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_of_diagonal_metric() {
        let m = array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.25, 0.0)]];
        let r = principal_sqrt(&m).unwrap();
        assert!((r[[0, 0]] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((r[[1, 1]] - c(0.5, 0.0)).norm() < 1e-14);
        assert!(r[[0, 1]].norm() < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        // PD by construction: B†B + I.
        let b = array![
            [c(0.4, 0.3), c(-0.2, 0.1), c(0.0, 0.7)],
            [c(0.1, 0.0), c(0.5, -0.5), c(0.3, 0.2)],
            [c(-0.3, 0.2), c(0.2, 0.2), c(0.1, -0.4)],
        ];
        let m = adjoint(&b).dot(&b) + identity(3);
        let r = principal_sqrt(&m).unwrap();
        assert!(max_abs(&(r.dot(&r) - &m)) < 1e-10);
        assert!(hermiticity_residual(&r) < 1e-10);
    }

    #[test]
    fn sqrt_rejects_bad_inputs() {
        let indefinite = array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        assert!(matches!(
            principal_sqrt(&indefinite),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let nonherm = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        assert!(matches!(
            principal_sqrt(&nonherm),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z: CMatrix = Array2::zeros((3, 3));
        let e = matrix_exp(&z);
        assert!(max_abs(&(&e - &identity(3))) < 1e-15);
    }

    #[test]
    fn exp_of_nilpotent_truncates() {
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        let e = matrix_exp(&m);
        let want = array![[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(max_abs(&(&e - &want)) < 1e-15);
    }

    #[test]
    fn exp_of_diagonal_is_entrywise() {
        let m = array![
            [c(2.0f64.ln(), 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, std::f64::consts::FRAC_PI_2)],
        ];
        let e = matrix_exp(&m);
        assert!((e[[0, 0]] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((e[[1, 1]] - c(0.0, 1.0)).norm() < 1e-14);
        assert!(e[[0, 1]].norm() < 1e-15);
    }

    #[test]
    fn exp_matches_hermitian_eigen_route() {
        // ‖A‖ ≈ 18 exercises the squaring phase.
        let a = array![
            [c(6.0, 0.0), c(2.0, 1.0), c(0.0, -3.0)],
            [c(2.0, -1.0), c(-4.0, 0.0), c(1.5, 0.0)],
            [c(0.0, 3.0), c(1.5, 0.0), c(9.0, 0.0)],
        ];
        let e = matrix_exp(&a);
        let (w, v) = eigh_decomp(&a).unwrap();
        let oracle = hermitian_function(&v, &w, f64::exp);
        let scale = max_abs(&oracle);
        assert!(max_abs(&(&e - &oracle)) < 1e-12 * scale);
    }

    #[test]
    fn exp_of_antihermitian_is_unitary() {
        let k = array![
            [c(0.0, 1.2), c(0.7, 0.3), c(-0.2, 0.5)],
            [c(-0.7, 0.3), c(0.0, -0.4), c(0.9, 0.0)],
            [c(0.2, 0.5), c(-0.9, 0.0), c(0.0, 2.0)],
        ];
        // k is anti-Hermitian: k† = −k.
        assert!(max_abs(&(adjoint(&k) + &k)) < 1e-15);
        let e = matrix_exp(&k);
        assert!(max_abs(&(adjoint(&e).dot(&e) - identity(3))) < 1e-13);
    }

    #[test]
    fn propagate_constant_matches_matrix_exp() {
        let h = two_level(0.9);
        let t = 0.8;
        let tdo = TimeDependentOperator::constant(0.0, 1.0, h.clone());
        let u = propagate(&tdo, 0.0, t, 37).unwrap();
        let want = matrix_exp(&(&h * c(0.0, -t)));
        assert!(max_abs(&(&u - &want)) < 1e-12);
    }

    #[test]
    fn propagate_degenerate_window_is_identity() {
        let tdo = TimeDependentOperator::constant(0.0, 1.0, two_level(1.0));
        let u = propagate(&tdo, 0.3, 0.3, 10).unwrap();
        assert_eq!(max_abs(&(&u - &identity(2))), 0.0);
    }

    #[test]
    fn propagate_commuting_family_reduces_to_quadrature() {
        // H(t) = sin(t) D with constant diagonal D: U = exp(−i (1 − cos t) D).
        let d = array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-2.0, 0.0)]];
        let dc = d.clone();
        let h = TimeDependentOperator::analytic(0.0, 1.0, 2, move |t| &dc * cr(t.sin()));
        let u = propagate(&h, 0.0, 1.0, 2000).unwrap();
        let phase = 1.0 - 1.0f64.cos();
        let want = matrix_exp(&(&d * c(0.0, -phase)));
        assert!(max_abs(&(&u - &want)) < 1e-7);
    }

    #[test]
    fn propagate_composes_over_subintervals() {
        let h = TimeDependentOperator::analytic(0.0, 1.0, 2, |t| {
            array![
                [c(t, 0.0), c(0.3, 0.1 * t)],
                [c(0.3, -0.1 * t), c(-0.5 * t, 0.0)]
            ]
        });
        // same Δt on both partitions
        let full = propagate(&h, 0.0, 0.8, 800).unwrap();
        let first = propagate(&h, 0.0, 0.5, 500).unwrap();
        let second = propagate(&h, 0.5, 0.8, 300).unwrap();
        assert!(max_abs(&(second.dot(&first) - &full)) < 1e-12);
    }

    #[test]
    fn propagate_hermitian_generator_stays_unitary() {
        let h = TimeDependentOperator::analytic(0.0, 1.0, 2, |t| {
            array![
                [c(1.0 + t, 0.0), c(0.5, 0.2 + t)],
                [c(0.5, -0.2 - t), c(-0.3, 0.0)]
            ]
        });
        let u = propagate(&h, 0.0, 1.0, 1000).unwrap();
        assert!(max_abs(&(adjoint(&u).dot(&u) - identity(2))) < 1e-8);
    }

    #[test]
    fn propagator_grid_inverse_chain() {
        let h = TimeDependentOperator::analytic(0.0, 1.0, 2, |t| {
            array![
                [c(0.0, 0.0), c(1.0, 0.5 * t)],
                [c(4.0, -0.5 * t), c(t, 0.0)]
            ]
        });
        let grid = UniformGrid::new(0.0, 1.0, 200).unwrap();
        let pg = propagate_grid(&h, grid).unwrap();
        assert_eq!(max_abs(&(&pg.forward[0] - &identity(2))), 0.0);
        for k in [1, 100, 200] {
            let prod = pg.backward[k].dot(&pg.forward[k]);
            assert!(max_abs(&(&prod - &identity(2))) < 1e-10, "node {k}");
        }
    }

    #[test]
    fn evolve_state_matches_propagator_action() {
        let h = TimeDependentOperator::analytic(0.0, 1.0, 2, |t| {
            array![
                [c(0.2, 0.0), c(1.0, t)],
                [c(1.0, -t), c(-0.7, 0.0)]
            ]
        });
        let grid = UniformGrid::new(0.0, 1.0, 300).unwrap();
        let psi0 = Array1::from(vec![c(0.6, 0.0), c(0.0, -0.8)]);
        let traj = evolve_state(&h, &psi0, grid).unwrap();
        let u = propagate(&h, 0.0, 1.0, 300).unwrap();
        let want = u.dot(&psi0);
        let got = &traj.states[300];
        assert!(max_abs_vec(&(got - &want)) < 1e-12);
    }

    #[test]
    fn sampled_eval_hits_nodes_and_interpolates() {
        let grid = UniformGrid::new(0.0, 1.0, 4).unwrap();
        let samples: Vec<CMatrix> = (0..=4)
            .map(|k| identity(2) * cr(k as f64))
            .collect();
        let op = TimeDependentOperator::sampled(grid, samples.clone()).unwrap();
        // node evaluation returns the stored sample verbatim
        assert_eq!(max_abs(&(op.eval(grid.time(2)) - &samples[2])), 0.0);
        // midpoint is the average of the neighbours
        let m = op.eval(grid.mid(1));
        assert!((m[[0, 0]] - c(1.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sampled_refuses_foreign_grid() {
        let grid = UniformGrid::new(0.0, 1.0, 4).unwrap();
        let op = TimeDependentOperator::sampled(
            grid,
            (0..=4).map(|_| identity(2)).collect(),
        )
        .unwrap();
        let other = UniformGrid::new(0.0, 1.0, 5).unwrap();
        assert!(matches!(op.sample_on(&other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn derivatives_exact_on_quadratics() {
        // s(t) = t² M: both stencil families are exact on quadratics.
        let m0 = array![[c(1.0, 0.5)]];
        let dt = 0.1;
        let samples: Vec<CMatrix> = (0..6)
            .map(|k| {
                let t = k as f64 * dt;
                &m0 * cr(t * t)
            })
            .collect();
        let d = time_derivatives(&samples, dt).unwrap();
        for (k, dk) in d.iter().enumerate() {
            let t = k as f64 * dt;
            let want = &m0 * cr(2.0 * t);
            assert!(max_abs(&(dk - &want)) < 1e-12, "node {k}");
        }
    }
}
