//! Built-in model systems with closed-form references: a 2×2 non-Hermitian
//! Hamiltonian with a known metric, and a truncated harmonic oscillator with
//! a complex parity drive whose propagator, metric and Hermitian
//! representative are all known in closed form.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::bundle::{
    BundleChart, CurveSegment, FiberVector, MatrixField, ObservableSection, ParamCurve,
    TransitionMap,
};
use crate::error::{Error, Result};
use crate::linalg::{adjoint, cr, ensure_finite_vec, matrix_exp, CMatrix, CVector, TimeDependentOperator, UniformGrid};
use crate::metric::MetricOperator;

const MINUS_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };

/// The two-level system H = ε[[0, 1], [4, 0]]: non-Hermitian with a real
/// spectrum ±2ε, so expectation values are real only for the right inner
/// product.
#[derive(Debug, Clone, Copy)]
pub struct IntroSystem {
    pub epsilon: f64,
}

impl IntroSystem {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { epsilon })
    }

    pub fn hamiltonian(&self) -> CMatrix {
        let e = self.epsilon;
        let mut h = CMatrix::zeros((2, 2));
        h[(0, 1)] = cr(e);
        h[(1, 0)] = cr(4.0 * e);
        h
    }

    /// The metric diag(1, 1/4) that makes the Hamiltonian self-adjoint.
    pub fn canonical_metric(&self) -> MetricOperator {
        let mut eta = CMatrix::zeros((2, 2));
        eta[(0, 0)] = cr(1.0);
        eta[(1, 1)] = cr(0.25);
        MetricOperator::new(&eta).expect("constant diagonal metric is positive definite")
    }

    /// The normalized state (1, −i)/√2 whose Euclidean expectation value of H
    /// is purely imaginary.
    pub fn chi(&self) -> CVector {
        let s = 1.0 / 2.0f64.sqrt();
        Array1::from(vec![cr(s), Complex64::new(0.0, -s)])
    }

    /// ⟨ψ, Hψ⟩/⟨ψ, ψ⟩ in the Euclidean inner product, or the η-expectation
    /// when a metric is supplied.
    pub fn expectation(&self, state: &CVector, metric: Option<&MetricOperator>) -> Result<Complex64> {
        ensure_finite_vec(state)?;
        let h = self.hamiltonian();
        match metric {
            Some(m) => m.expectation(&h, state),
            None => {
                let denom: f64 = state.iter().map(|z| z.norm_sqr()).sum();
                if denom <= 0.0 {
                    return Err(Error::ZeroState);
                }
                let h_psi = h.dot(state);
                let num: Complex64 = state
                    .iter()
                    .zip(h_psi.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                Ok(num / denom)
            }
        }
    }

    /// The η-expectation of H for η = diag(1, 1/4) in closed form:
    /// 8ε·Re(ξ₁* ξ₂)/(4|ξ₁|² + |ξ₂|²).
    pub fn eta_expectation_closed_form(&self, xi: &CVector) -> Result<f64> {
        if xi.len() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "two-level state has 2 components, got {}",
                xi.len()
            )));
        }
        let denom = 4.0 * xi[0].norm_sqr() + xi[1].norm_sqr();
        if denom <= 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(8.0 * self.epsilon * (xi[0].conj() * xi[1]).re / denom)
    }
}

impl Default for IntroSystem {
    fn default() -> Self {
        Self { epsilon: 1.0 }
    }
}

/// Time profile of the parity drive f(t).
#[derive(Debug, Clone)]
pub enum DriveProfile {
    Constant(Complex64),
    /// f(t) = amplitude · e^{i·frequency·t}
    Exponential { amplitude: Complex64, frequency: f64 },
    /// Right-continuous steps: f(t) = values[i] for the last starts[i] ≤ t
    /// (values[0] before the first start). Quadrature across a jump is only
    /// first-order accurate, so grids should place nodes on the jumps.
    PiecewiseConstant { starts: Vec<f64>, values: Vec<Complex64> },
    /// Tabulated values on a uniform grid, linearly interpolated.
    Samples { grid: UniformGrid, values: Vec<Complex64> },
}

impl DriveProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Constant(v) => {
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
            Self::Exponential { amplitude, frequency } => {
                if !amplitude.re.is_finite() || !amplitude.im.is_finite() || !frequency.is_finite() {
                    return Err(Error::NonFinite);
                }
            }
            Self::PiecewiseConstant { starts, values } => {
                if starts.is_empty() || starts.len() != values.len() {
                    return Err(Error::InvalidGrid(
                        "piecewise drive needs one value per start time".into(),
                    ));
                }
                if starts.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidGrid(
                        "piecewise drive start times must be strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
            Self::Samples { grid, values } => {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch(format!(
                        "{} drive samples on a grid with {} nodes",
                        values.len(),
                        grid.len()
                    )));
                }
                if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match self {
            Self::Constant(v) => *v,
            Self::Exponential { amplitude, frequency } => {
                amplitude * Complex64::new(0.0, frequency * t).exp()
            }
            Self::PiecewiseConstant { starts, values } => {
                let mut out = values[0];
                for (s, v) in starts.iter().zip(values.iter()) {
                    if *s <= t {
                        out = *v;
                    } else {
                        break;
                    }
                }
                out
            }
            Self::Samples { grid, values } => {
                let x = (t - grid.t0) / grid.dt();
                let k = (x.floor().max(0.0) as usize).min(grid.steps.saturating_sub(1));
                let frac = x - k as f64;
                if frac.abs() <= 1e-9 {
                    values[k]
                } else if (frac - 1.0).abs() <= 1e-9 {
                    values[k + 1]
                } else {
                    values[k] * cr(1.0 - frac) + values[k + 1] * cr(frac)
                }
            }
        }
    }

    /// Cumulative trapezoid integral F(t_k) = ∫_{t₀}^{t_k} f, at every node.
    pub fn integral_samples(&self, grid: &UniformGrid) -> Vec<Complex64> {
        let dt = grid.dt();
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = Complex64::new(0.0, 0.0);
        out.push(acc);
        let mut prev = self.eval(grid.time(0));
        for k in 1..grid.len() {
            let cur = self.eval(grid.time(k));
            acc += (prev + cur) * cr(0.5 * dt);
            out.push(acc);
            prev = cur;
        }
        out
    }
}

/// Closed-form reference operators for the oscillator-plus-parity model at a
/// single time: the propagator, the metric, its square root, and the
/// Hermitian representative. All are diagonal and built entrywise, with no
/// matrix exponentials or eigendecompositions involved.
#[derive(Debug, Clone)]
pub struct ClosedForms {
    pub u: CMatrix,
    pub eta: CMatrix,
    pub rho: CMatrix,
    pub h: CMatrix,
}

/// Truncated harmonic oscillator with a parity drive: H(t) = H₀ + f(t)·P on
/// the lowest `levels` number states, with H₀ = diag(ω(n+1/2)) and
/// P = diag((−1)ⁿ). The dynamical sector (H₀, P, f·P) is closed under
/// truncation, so closed-form comparisons carry no truncation error; only the
/// position and momentum operators are truncation-approximate.
#[derive(Debug, Clone)]
pub struct OscillatorParitySystem {
    pub levels: usize,
    pub omega: f64,
    pub mass: f64,
    pub drive: DriveProfile,
    /// Default time window and resolution for runs of this fixture.
    pub grid: UniformGrid,
}

impl OscillatorParitySystem {
    pub fn new(
        levels: usize,
        omega: f64,
        mass: f64,
        drive: DriveProfile,
        grid: UniformGrid,
    ) -> Result<Self> {
        if levels == 0 {
            return Err(Error::DimensionMismatch(
                "oscillator truncation needs at least one level".into(),
            ));
        }
        if !(omega > 0.0) || !(mass > 0.0) || !omega.is_finite() || !mass.is_finite() {
            return Err(Error::NonFinite);
        }
        drive.validate()?;
        Ok(Self { levels, omega, mass, drive, grid })
    }

    /// The stock fixture: 16 levels, ω = m = 1, drive 0.2+0.3i times e^{1.3it},
    /// on the unit interval.
    pub fn standard() -> Self {
        Self::new(
            16,
            1.0,
            1.0,
            DriveProfile::Exponential {
                amplitude: Complex64::new(0.2, 0.3),
                frequency: 1.3,
            },
            UniformGrid::new(0.0, 1.0, 1000).expect("static grid parameters are valid"),
        )
        .expect("static fixture parameters are valid")
    }

    fn level_energies(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|n| self.omega * (n as f64 + 0.5))
            .collect()
    }

    fn parity_signs(&self) -> Vec<f64> {
        (0..self.levels)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 })
            .collect()
    }

    pub fn h0(&self) -> CMatrix {
        Array2::from_diag(&Array1::from(
            self.level_energies().into_iter().map(cr).collect::<Vec<_>>(),
        ))
    }

    pub fn parity(&self) -> CMatrix {
        Array2::from_diag(&Array1::from(
            self.parity_signs().into_iter().map(cr).collect::<Vec<_>>(),
        ))
    }

    /// H(t) = H₀ + f(t)·P over the fixture's time window.
    pub fn hamiltonian(&self) -> TimeDependentOperator {
        let h0 = self.h0();
        let parity = self.parity();
        let drive = self.drive.clone();
        TimeDependentOperator::analytic(self.grid.t0, self.grid.t1, self.levels, move |t| {
            &h0 + &parity * drive.eval(t)
        })
    }

    /// Eigenvalues of H(t): ω(n+1/2) + (−1)ⁿ f(t).
    pub fn spectrum_at(&self, t: f64) -> Vec<Complex64> {
        let f = self.drive.eval(t);
        self.level_energies()
            .into_iter()
            .zip(self.parity_signs())
            .map(|(e, p)| cr(e) + f * cr(p))
            .collect()
    }

    /// Closed forms at time `t`, with F(t) = ∫_{t0}^t f by trapezoid
    /// quadrature on `quad_steps` cells:
    ///   U = exp(−i(t−t0)H₀)·exp(−iF·P), η = exp(−2Im[F]·P),
    ///   ρ = exp(−Im[F]·P),  h = H₀ + Re[f(t)]·P.
    pub fn closed_forms(&self, t0: f64, t: f64, quad_steps: usize) -> Result<ClosedForms> {
        let f_int = self.drive_integral(t0, t, quad_steps)?;
        Ok(self.closed_forms_from_integral(t0, t, f_int))
    }

    /// F(t) = ∫_{t0}^t f by trapezoid quadrature.
    fn drive_integral(&self, t0: f64, t: f64, quad_steps: usize) -> Result<Complex64> {
        if t < t0 {
            return Err(Error::InvalidGrid(format!(
                "closed forms need t ≥ t0, got t0 = {t0}, t = {t}"
            )));
        }
        if t == t0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let grid = UniformGrid::new(t0, t, quad_steps)?;
        Ok(*self
            .drive
            .integral_samples(&grid)
            .last()
            .expect("grid has at least one node"))
    }

    /// Closed forms at every node of `grid`, sharing one cumulative
    /// quadrature of the drive.
    pub fn closed_forms_grid(&self, grid: &UniformGrid) -> Vec<ClosedForms> {
        self.drive
            .integral_samples(grid)
            .into_iter()
            .enumerate()
            .map(|(k, f_int)| self.closed_forms_from_integral(grid.t0, grid.time(k), f_int))
            .collect()
    }

    fn closed_forms_from_integral(&self, t0: f64, t: f64, f_int: Complex64) -> ClosedForms {
        let n = self.levels;
        let f_now = self.drive.eval(t);
        let mut u = CMatrix::zeros((n, n));
        let mut eta = CMatrix::zeros((n, n));
        let mut rho = CMatrix::zeros((n, n));
        let mut h = CMatrix::zeros((n, n));
        for (k, (e, p)) in self
            .level_energies()
            .into_iter()
            .zip(self.parity_signs())
            .enumerate()
        {
            let phase0 = (MINUS_I * cr((t - t0) * e)).exp();
            u[(k, k)] = phase0 * (MINUS_I * f_int * cr(p)).exp();
            eta[(k, k)] = cr((-2.0 * f_int.im * p).exp());
            rho[(k, k)] = cr((-f_int.im * p).exp());
            h[(k, k)] = cr(e + f_now.re * p);
        }
        ClosedForms { u, eta, rho, h }
    }

    /// Truncated ladder-operator position and momentum:
    /// X = (a+a†)/√(2mω), P = i√(mω/2)(a†−a); both tridiagonal, Hermitian,
    /// and satisfying [X, P] = i·I except in the (N−1, N−1) corner, where the
    /// cutoff leaves i(1−N).
    pub fn position_momentum(&self) -> (CMatrix, CMatrix) {
        let n = self.levels;
        let mut x = CMatrix::zeros((n, n));
        let mut p = CMatrix::zeros((n, n));
        for k in 0..n.saturating_sub(1) {
            let amp = ((k + 1) as f64).sqrt();
            let x_amp = amp / (2.0 * self.mass * self.omega).sqrt();
            let p_amp = amp * (self.mass * self.omega / 2.0).sqrt();
            x[(k, k + 1)] = cr(x_amp);
            x[(k + 1, k)] = cr(x_amp);
            p[(k, k + 1)] = Complex64::new(0.0, -p_amp);
            p[(k + 1, k)] = Complex64::new(0.0, p_amp);
        }
        (x, p)
    }

    /// The physical position and momentum at time t: both acquire the left
    /// factor exp(2 Im[F(t)]·P), which also equals conjugation by ρ(t) since
    /// parity anticommutes with X and P.
    pub fn metric_position_momentum(
        &self,
        t0: f64,
        t: f64,
        quad_steps: usize,
    ) -> Result<(CMatrix, CMatrix)> {
        let im_f = self.drive_integral(t0, t, quad_steps)?.im;
        let (x, p) = self.position_momentum();
        let mut xe = x;
        let mut pe = p;
        for (i, sign) in self.parity_signs().into_iter().enumerate() {
            let scale = cr((2.0 * im_f * sign).exp());
            for j in 0..self.levels {
                xe[(i, j)] *= scale;
                pe[(i, j)] *= scale;
            }
        }
        Ok((xe, pe))
    }
}

/// A two-chart bundle over a one-dimensional parameter, with everything the
/// multi-chart machinery consumes: charts, transitions both ways, energy and
/// observable sections in both charts, a two-segment curve crossing the
/// overlap, and an initial fiber state.
pub struct TwoChartBundle {
    pub charts: Vec<BundleChart>,
    pub transitions: Vec<TransitionMap>,
    pub energy: ObservableSection,
    pub observable: ObservableSection,
    pub curve: ParamCurve,
    pub initial: FiberVector,
}

fn sigma_x() -> CMatrix {
    let mut m = CMatrix::zeros((2, 2));
    m[(0, 1)] = cr(1.0);
    m[(1, 0)] = cr(1.0);
    m
}

/// Build the stock two-chart fixture: an "east" chart carrying the
/// metric-adapted connection of ρ(R) = exp(−s(R)P), s = 0.4 sin R, and a
/// "west" chart related to it by the unitary gauge field
/// g(R) = exp(iθ(R)σₓ), θ = 0.3(1+cos R). The curve runs R(t) = 3t over the
/// unit time interval, switching charts at t = 0.55 (R = 1.65).
pub fn two_chart_bundle() -> TwoChartBundle {
    let rho: MatrixField = Arc::new(|r: &[f64]| {
        let s = 0.4 * r[0].sin();
        let mut m = CMatrix::zeros((2, 2));
        m[(0, 0)] = cr((-s).exp());
        m[(1, 1)] = cr(s.exp());
        m
    });
    let east = BundleChart::from_rho("east", 1, 2, rho).expect("static chart data is valid");
    let g_field: MatrixField = Arc::new(|r: &[f64]| {
        let theta = 0.3 * (1.0 + r[0].cos());
        matrix_exp(&(sigma_x() * Complex64::new(0.0, theta)))
    });
    let probes: Vec<Vec<f64>> = vec![vec![1.2], vec![1.65], vec![2.4], vec![3.0]];
    let mut west =
        crate::bundle::gauge_transform(&east, g_field.clone(), &probes).expect("gauge field is unitary");
    west.id = "west".into();
    let east_to_west =
        TransitionMap::new(&east, &west, g_field.clone(), &probes).expect("gauge map is a valid transition");
    let g_back: MatrixField = {
        let gf = g_field.clone();
        // g is unitary, so the reverse transition is its adjoint.
        Arc::new(move |r: &[f64]| adjoint(&gf(r)))
    };
    let west_to_east =
        TransitionMap::new(&west, &east, g_back, &probes).expect("gauge map is a valid transition");

    let h_field = |r: &[f64]| -> CMatrix {
        let mut m = CMatrix::zeros((2, 2));
        m[(0, 0)] = cr(1.0 + 0.2 * r[0].cos());
        m[(0, 1)] = cr(0.1);
        m[(1, 0)] = cr(0.1);
        m[(1, 1)] = cr(-0.5);
        m
    };
    let energy_east: MatrixField = {
        let chart = east.clone();
        Arc::new(move |r: &[f64]| {
            let rho = chart.rho_at(r).expect("fixture metric is positive definite");
            let rho_inv = {
                let mut m = CMatrix::zeros((2, 2));
                m[(0, 0)] = cr(1.0) / rho[(0, 0)];
                m[(1, 1)] = cr(1.0) / rho[(1, 1)];
                m
            };
            rho_inv.dot(&h_field(r)).dot(&rho)
        })
    };
    let energy_west: MatrixField = {
        let ef = energy_east.clone();
        let gf = g_field.clone();
        Arc::new(move |r: &[f64]| {
            let g = gf(r);
            g.dot(&ef(r)).dot(&adjoint(&g))
        })
    };
    let obs_east: MatrixField = {
        let chart = east.clone();
        Arc::new(move |r: &[f64]| {
            let rho = chart.rho_at(r).expect("fixture metric is positive definite");
            let rho_inv = {
                let mut m = CMatrix::zeros((2, 2));
                m[(0, 0)] = cr(1.0) / rho[(0, 0)];
                m[(1, 1)] = cr(1.0) / rho[(1, 1)];
                m
            };
            rho_inv.dot(&sigma_x()).dot(&rho)
        })
    };
    let obs_west: MatrixField = {
        let of = obs_east.clone();
        let gf = g_field;
        Arc::new(move |r: &[f64]| {
            let g = gf(r);
            g.dot(&of(r)).dot(&adjoint(&g))
        })
    };
    let energy = ObservableSection::new()
        .with("east", energy_east)
        .with("west", energy_west);
    let observable = ObservableSection::new()
        .with("east", obs_east)
        .with("west", obs_west);

    let left = CurveSegment {
        chart_id: "east".into(),
        t_start: 0.0,
        t_end: 0.55,
        path: Arc::new(|t: f64| vec![3.0 * t]),
        velocity: Arc::new(|_: f64| vec![3.0]),
    };
    let right = CurveSegment {
        chart_id: "west".into(),
        t_start: 0.55,
        t_end: 1.0,
        path: Arc::new(|t: f64| vec![3.0 * t]),
        velocity: Arc::new(|_: f64| vec![3.0]),
    };
    let curve = ParamCurve::new(vec![left, right]).expect("static curve data is contiguous");
    let initial = FiberVector {
        chart_id: "east".into(),
        r: vec![0.0],
        components: Array1::from(vec![Complex64::new(0.8, 0.1), Complex64::new(-0.2, 0.55)]),
    };
    TwoChartBundle {
        charts: vec![east, west],
        transitions: vec![east_to_west, west_to_east],
        energy,
        observable,
        curve,
        initial,
    }
}
