//! Chart-wise Hermitian vector bundle machinery: fiber metrics η(R), local
//! connection one-forms A_a(R), parallel transport and total (connection +
//! energy) evolution along parameter curves, gauge and patch transformations,
//! and multi-chart dynamics with junction handoffs.
//!
//! Everything is chart-local: a chart is a box in ℝ^d of parameters R with
//! matrix-valued fields over it, and global structure enters only through
//! transition maps validated on overlap points. Fields are supplied as pure
//! callables (same R → same matrix); gradients default to central finite
//! differences with a relative step, and closed forms are accepted where
//! available.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray_linalg::Inverse;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::heisenberg::{HeisenbergTrajectory, RepKind};
use crate::linalg::{
    adjoint, cr, evolve_state, identity, max_abs, principal_sqrt, propagate_grid, CMatrix,
    CVector, TimeDependentOperator, UniformGrid,
};
use crate::metric::MetricOperator;
use crate::tol;

const MINUS_I: Complex64 = Complex64 { re: 0.0, im: -1.0 };
const PLUS_I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A matrix-valued field over chart parameters.
pub type MatrixField = Arc<dyn Fn(&[f64]) -> CMatrix + Send + Sync>;
/// A list of matrix-valued fields (one per base direction), e.g. ∂_a η.
pub type GradField = Arc<dyn Fn(&[f64]) -> Vec<CMatrix> + Send + Sync>;
/// A parameter-space path t ↦ R(t) (or its velocity).
pub type PathField = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

fn point_str(r: &[f64]) -> String {
    format!("{r:?}")
}

/// Central finite difference ∂_a field at `r`, with step `step·max(1, |r_a|)`.
pub fn fd_partial(field: &MatrixField, r: &[f64], a: usize, step: f64) -> CMatrix {
    let h = step * r[a].abs().max(1.0);
    let mut plus = r.to_vec();
    plus[a] += h;
    let mut minus = r.to_vec();
    minus[a] -= h;
    (field(&plus) - field(&minus)) * cr(1.0 / (2.0 * h))
}

/// One chart of a Hermitian vector bundle: a fiber metric field η(R) and a
/// local connection one-form A = Σ_a A_a(R) dR^a over a d-dimensional
/// parameter box, with optional closed-form data (∂_a η, ρ = η^{1/2}).
#[derive(Clone)]
pub struct BundleChart {
    pub id: String,
    pub dim_base: usize,
    pub fiber_dim: usize,
    eta_field: MatrixField,
    connection: Vec<MatrixField>,
    eta_grad: Option<GradField>,
    rho: Option<MatrixField>,
    fd_step: f64,
}

impl BundleChart {
    pub fn new(
        id: impl Into<String>,
        dim_base: usize,
        fiber_dim: usize,
        eta_field: MatrixField,
        connection: Vec<MatrixField>,
    ) -> Result<Self> {
        if dim_base == 0 {
            return Err(Error::DimensionMismatch(
                "chart needs at least one base direction".into(),
            ));
        }
        if connection.len() != dim_base {
            return Err(Error::DimensionMismatch(format!(
                "{} connection components for a {dim_base}-dimensional base",
                connection.len()
            )));
        }
        Ok(Self {
            id: id.into(),
            dim_base,
            fiber_dim,
            eta_field,
            connection,
            eta_grad: None,
            rho: None,
            fd_step: tol::FD_STEP,
        })
    }

    /// Chart with the metric-adapted connection A_a = −i ρ⁻¹ ∂_a ρ built from
    /// a Hermitian positive-definite square-root field ρ(R); the metric is
    /// η = ρ². This connection is automatically metric-compatible, and its
    /// Hermitian representative along any curve vanishes.
    pub fn from_rho(
        id: impl Into<String>,
        dim_base: usize,
        fiber_dim: usize,
        rho_field: MatrixField,
    ) -> Result<Self> {
        let step = tol::FD_STEP;
        let eta_field: MatrixField = {
            let rf = rho_field.clone();
            Arc::new(move |r: &[f64]| {
                let p = rf(r);
                p.dot(&p)
            })
        };
        let connection: Vec<MatrixField> = (0..dim_base)
            .map(|a| {
                let rf = rho_field.clone();
                Arc::new(move |r: &[f64]| {
                    let rho = rf(r);
                    let drho = fd_partial(&rf, r, a, step);
                    rho.inv()
                        .expect("square-root metric field must be invertible on its domain")
                        .dot(&drho)
                        * MINUS_I
                }) as MatrixField
            })
            .collect();
        let mut chart = Self::new(id, dim_base, fiber_dim, eta_field, connection)?;
        chart.rho = Some(rho_field);
        chart.fd_step = step;
        Ok(chart)
    }

    /// Attach a closed-form metric gradient R ↦ [∂_a η]; otherwise gradients
    /// fall back to finite differences.
    pub fn with_eta_grad(mut self, grad: GradField) -> Self {
        self.eta_grad = Some(grad);
        self
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// Raw metric matrix at a point (no validation).
    pub fn eta_matrix(&self, r: &[f64]) -> CMatrix {
        (self.eta_field)(r)
    }

    /// Validated metric at a point.
    pub fn eta_at(&self, r: &[f64]) -> Result<MetricOperator> {
        MetricOperator::new(&(self.eta_field)(r))
    }

    /// ρ(R) = η(R)^{1/2}: the stored closed form when the chart was built from
    /// one, otherwise the principal square root of the metric.
    pub fn rho_at(&self, r: &[f64]) -> Result<CMatrix> {
        match &self.rho {
            Some(rf) => Ok(rf(r)),
            None => principal_sqrt(&(self.eta_field)(r)),
        }
    }

    /// ρ as a field, for finite-differencing along curves.
    pub fn rho_map(&self) -> MatrixField {
        match &self.rho {
            Some(rf) => rf.clone(),
            None => {
                let ef = self.eta_field.clone();
                Arc::new(move |r: &[f64]| {
                    principal_sqrt(&ef(r))
                        .expect("chart metric must be Hermitian positive definite on its domain")
                })
            }
        }
    }

    /// Connection component A_a(R).
    pub fn connection_at(&self, r: &[f64], a: usize) -> CMatrix {
        assert!(a < self.dim_base, "direction {a} on a {}-dim base", self.dim_base);
        (self.connection[a])(r)
    }

    /// Metric gradients [∂_a η](R): closed form if attached, else central
    /// finite differences of the metric field.
    pub fn eta_grad_at(&self, r: &[f64]) -> Vec<CMatrix> {
        match &self.eta_grad {
            Some(gf) => gf(r),
            None => (0..self.dim_base)
                .map(|a| fd_partial(&self.eta_field, r, a, self.fd_step))
                .collect(),
        }
    }
}

/// H_A(t) = Σ_a A_a(R) Ṙ^a: the generator of parallel transport along a curve
/// passing through R with velocity Ṙ.
pub fn connection_hamiltonian(chart: &BundleChart, r: &[f64], r_dot: &[f64]) -> CMatrix {
    assert_eq!(
        r_dot.len(),
        chart.dim_base,
        "velocity dimension must match the base dimension"
    );
    let mut out = chart.connection_at(r, 0) * cr(r_dot[0]);
    for a in 1..chart.dim_base {
        out = out + chart.connection_at(r, a) * cr(r_dot[a]);
    }
    out
}

/// max over directions of ‖A_a†η − ηA_a − i ∂_a η‖_max at R; zero certifies
/// that parallel transport preserves the fiber inner products at this point.
pub fn metric_compatibility_residual(chart: &BundleChart, r: &[f64]) -> Result<f64> {
    let eta = chart.eta_matrix(r);
    let grads = chart.eta_grad_at(r);
    if grads.len() != chart.dim_base {
        return Err(Error::MissingGradient(format!(
            "{} gradient components for a {}-dimensional base",
            grads.len(),
            chart.dim_base
        )));
    }
    let mut worst = 0.0f64;
    for a in 0..chart.dim_base {
        let aa = chart.connection_at(r, a);
        let m = adjoint(&aa).dot(&eta) - eta.dot(&aa) - &grads[a] * PLUS_I;
        worst = worst.max(max_abs(&m));
    }
    Ok(worst)
}

/// One time-parameterized piece of a curve lying inside a single chart.
#[derive(Clone)]
pub struct CurveSegment {
    pub chart_id: String,
    pub t_start: f64,
    pub t_end: f64,
    pub path: PathField,
    pub velocity: PathField,
}

/// A piecewise curve through parameter space; consecutive segments must be
/// contiguous in time (junction instants belong to both segments).
#[derive(Clone)]
pub struct ParamCurve {
    pub segments: Vec<CurveSegment>,
}

impl ParamCurve {
    pub fn new(segments: Vec<CurveSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidGrid("curve needs at least one segment".into()));
        }
        for seg in &segments {
            if !(seg.t_end > seg.t_start) {
                return Err(Error::InvalidGrid(format!(
                    "segment on chart {} has empty span [{}, {}]",
                    seg.chart_id, seg.t_start, seg.t_end
                )));
            }
        }
        for pair in segments.windows(2) {
            let gap = (pair[1].t_start - pair[0].t_end).abs();
            let scale = (pair[1].t_end - pair[0].t_start).abs().max(1.0);
            if gap > 1e-12 * scale {
                return Err(Error::InvalidGrid(format!(
                    "segments are not contiguous: {} ends at {}, next starts at {}",
                    pair[0].chart_id, pair[0].t_end, pair[1].t_start
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn t_start(&self) -> f64 {
        self.segments[0].t_start
    }

    pub fn t_end(&self) -> f64 {
        self.segments[self.segments.len() - 1].t_end
    }
}

/// A state attached to a point of the base, expressed in a chart.
#[derive(Debug, Clone)]
pub struct FiberVector {
    pub chart_id: String,
    pub r: Vec<f64>,
    pub components: CVector,
}

/// Per-chart representatives of a global observable-valued section (the energy
/// section 𝔥 is one of these). Each value must be self-adjoint for the chart's
/// fiber inner product.
#[derive(Clone, Default)]
pub struct ObservableSection {
    fields: BTreeMap<String, MatrixField>,
}

impl ObservableSection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, chart_id: impl Into<String>, field: MatrixField) -> Self {
        self.fields.insert(chart_id.into(), field);
        self
    }

    pub fn at(&self, chart_id: &str, r: &[f64]) -> Result<CMatrix> {
        self.fields
            .get(chart_id)
            .map(|f| f(r))
            .ok_or_else(|| Error::UnknownChart(chart_id.into()))
    }
}

/// The Schrödinger generator along a segment, sampled on the grid nodes:
/// G(t_k) = H_A(t_k) + H_E(t_k), with the energy term omitted for pure
/// parallel transport. Energy samples are gated by the pseudo-Hermiticity
/// condition H_E† η = η H_E at each node.
fn segment_generator(
    chart: &BundleChart,
    seg: &CurveSegment,
    energy: Option<&ObservableSection>,
    grid: UniformGrid,
) -> Result<TimeDependentOperator> {
    let mut samples = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let t = grid.time(k);
        let r = (seg.path)(t);
        let r_dot = (seg.velocity)(t);
        if r.len() != chart.dim_base || r_dot.len() != chart.dim_base {
            return Err(Error::DimensionMismatch(format!(
                "curve point dimension {} vs base dimension {}",
                r.len(),
                chart.dim_base
            )));
        }
        let ha = connection_hamiltonian(chart, &r, &r_dot);
        let sample = match energy {
            None => ha,
            Some(section) => {
                let he = section.at(&chart.id, &r)?;
                let eta = chart.eta_matrix(&r);
                let res = max_abs(&(adjoint(&he).dot(&eta) - eta.dot(&he)));
                if res > tol::SECTION * max_abs(&eta.dot(&he)).max(1.0) {
                    return Err(Error::SectionNotPseudoHermitian {
                        point: r.clone(),
                        residual: res,
                    });
                }
                ha + he
            }
        };
        samples.push(sample);
    }
    TimeDependentOperator::sampled(grid, samples)
}

/// Parallel transport along one segment: solve i ∂_t Ψ = H_A(t) Ψ and return
/// the endpoint components.
pub fn horizontal_transport(
    chart: &BundleChart,
    seg: &CurveSegment,
    psi0: &CVector,
    steps: usize,
) -> Result<CVector> {
    let grid = UniformGrid::new(seg.t_start, seg.t_end, steps)?;
    let gen = segment_generator(chart, seg, None, grid)?;
    let traj = evolve_state(&gen, psi0, grid)?;
    Ok(traj.states[grid.steps].clone())
}

/// Evolution under the full generator H_A + H_E along one segment, returning
/// the state at every grid node together with its base point.
pub fn total_evolve(
    chart: &BundleChart,
    seg: &CurveSegment,
    energy: &ObservableSection,
    psi0: &FiberVector,
    steps: usize,
) -> Result<Vec<FiberVector>> {
    if seg.chart_id != chart.id {
        return Err(Error::UnknownChart(format!(
            "segment lives in chart {}, got chart {}",
            seg.chart_id, chart.id
        )));
    }
    if psi0.chart_id != chart.id {
        return Err(Error::UnknownChart(format!(
            "initial state is expressed in chart {}, segment needs {}",
            psi0.chart_id, chart.id
        )));
    }
    let grid = UniformGrid::new(seg.t_start, seg.t_end, steps)?;
    let gen = segment_generator(chart, seg, Some(energy), grid)?;
    let traj = evolve_state(&gen, &psi0.components, grid)?;
    Ok((0..grid.len())
        .map(|k| FiberVector {
            chart_id: chart.id.clone(),
            r: (seg.path)(grid.time(k)),
            components: traj.states[k].clone(),
        })
        .collect())
}

/// The Hermitian representative of the connection part along a segment:
/// h_A(t) = ρ H_A ρ⁻¹ + i ρ̇ ρ⁻¹, with ρ̇ by the chain rule Σ_a ∂_aρ · Ṙ^a
/// using the same finite-difference step as the chart's own gradients.
///
/// For the metric-adapted connection A_a = −i ρ⁻¹ ∂_a ρ the two terms cancel
/// and h_A vanishes identically.
pub fn connection_hermitian_rep(
    chart: &BundleChart,
    seg: &CurveSegment,
    grid: UniformGrid,
) -> Result<Vec<CMatrix>> {
    let rho_field = chart.rho_map();
    let mut out = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let t = grid.time(k);
        let r = (seg.path)(t);
        let r_dot = (seg.velocity)(t);
        let rho = rho_field(&r);
        let rho_inv = rho.inv()?;
        let ha = connection_hamiltonian(chart, &r, &r_dot);
        let mut rho_dot = fd_partial(&rho_field, &r, 0, chart.fd_step) * cr(r_dot[0]);
        for a in 1..chart.dim_base {
            rho_dot = rho_dot + fd_partial(&rho_field, &r, a, chart.fd_step) * cr(r_dot[a]);
        }
        out.push(rho.dot(&ha).dot(&rho_inv) + rho_dot.dot(&rho_inv) * PLUS_I);
    }
    Ok(out)
}

/// Rewrite a chart through an invertible fiber map g(R): the metric becomes
/// η′ = (g⁻¹)† η g⁻¹ and the connection A′_a = g A_a g⁻¹ + i (∂_a g) g⁻¹, so
/// that transported components map as Ψ′ = g Ψ and all invariant quantities
/// are unchanged. `probes` are points where invertibility and the transformed
/// metric are validated up front.
pub fn gauge_transform(
    chart: &BundleChart,
    g_field: MatrixField,
    probes: &[Vec<f64>],
) -> Result<BundleChart> {
    for p in probes {
        let g = g_field(p);
        if g.nrows() != chart.fiber_dim || g.ncols() != chart.fiber_dim {
            return Err(Error::DimensionMismatch(format!(
                "gauge field is {}×{}, fiber dimension is {}",
                g.nrows(),
                g.ncols(),
                chart.fiber_dim
            )));
        }
        g.inv().map_err(|_| Error::SingularGauge { point: p.clone() })?;
    }
    let step = chart.fd_step;
    let eta_field: MatrixField = {
        let ef = chart.eta_field.clone();
        let gf = g_field.clone();
        Arc::new(move |r: &[f64]| {
            let gi = gf(r)
                .inv()
                .expect("gauge field must be invertible on its domain");
            adjoint(&gi).dot(&ef(r)).dot(&gi)
        })
    };
    let connection: Vec<MatrixField> = (0..chart.dim_base)
        .map(|a| {
            let af = chart.connection[a].clone();
            let gf = g_field.clone();
            Arc::new(move |r: &[f64]| {
                let g = gf(r);
                let gi = g
                    .inv()
                    .expect("gauge field must be invertible on its domain");
                let dg = fd_partial(&gf, r, a, step);
                g.dot(&af(r)).dot(&gi) + dg.dot(&gi) * PLUS_I
            }) as MatrixField
        })
        .collect();
    let out = BundleChart {
        id: format!("{}'", chart.id),
        dim_base: chart.dim_base,
        fiber_dim: chart.fiber_dim,
        eta_field,
        connection,
        eta_grad: None,
        rho: None,
        fd_step: step,
    };
    for p in probes {
        out.eta_at(p)?;
    }
    Ok(out)
}

/// Fiber map relating two charts over their overlap: components map as
/// Ψ_to = g(R) Ψ_from. Construction validates invertibility and the
/// Hermitian-bundle condition g† η_to g = η_from at the probe points.
#[derive(Clone)]
pub struct TransitionMap {
    pub from: String,
    pub to: String,
    pub g: MatrixField,
}

impl TransitionMap {
    pub fn new(
        from_chart: &BundleChart,
        to_chart: &BundleChart,
        g: MatrixField,
        probes: &[Vec<f64>],
    ) -> Result<Self> {
        for p in probes {
            let gp = g(p);
            gp.inv().map_err(|_| Error::SingularGauge { point: p.clone() })?;
            let lhs = adjoint(&gp).dot(&to_chart.eta_matrix(p)).dot(&gp);
            let rhs = from_chart.eta_matrix(p);
            let res = max_abs(&(&lhs - &rhs));
            if res > tol::TRANSITION * max_abs(&rhs).max(1.0) {
                return Err(Error::NotUnitaryTransition { residual: res });
            }
        }
        Ok(Self {
            from: from_chart.id.clone(),
            to: to_chart.id.clone(),
            g,
        })
    }
}

/// How far two charts' connections are from being related by the transition
/// map at R: max over a of ‖A_a^to − [g A_a^from g⁻¹ + i (∂_a g) g⁻¹]‖_max.
pub fn patch_compatibility_residual(
    tm: &TransitionMap,
    chart_from: &BundleChart,
    chart_to: &BundleChart,
    r: &[f64],
) -> Result<f64> {
    if tm.from != chart_from.id || tm.to != chart_to.id {
        return Err(Error::UnknownChart(format!(
            "transition {} → {} does not relate charts {} and {}",
            tm.from, tm.to, chart_from.id, chart_to.id
        )));
    }
    let g = (tm.g)(r);
    let gi = g
        .inv()
        .map_err(|_| Error::SingularGauge { point: r.to_vec() })?;
    let mut worst = 0.0f64;
    for a in 0..chart_from.dim_base {
        let dg = fd_partial(&tm.g, r, a, chart_from.fd_step);
        let want = g.dot(&chart_from.connection_at(r, a)).dot(&gi) + dg.dot(&gi) * PLUS_I;
        worst = worst.max(max_abs(&(chart_to.connection_at(r, a) - want)));
    }
    Ok(worst)
}

/// Transport an observable's Euclidean-Hermitian representative across a
/// patch boundary: 𝒢 = ρ_to · g · ρ_from⁻¹ is unitary on a Hermitian bundle,
/// and the image is 𝒢 o 𝒢†.
pub fn observable_transition(
    tm: &TransitionMap,
    rho_from: &CMatrix,
    rho_to: &CMatrix,
    o: &CMatrix,
    r: &[f64],
) -> Result<CMatrix> {
    let g = (tm.g)(r);
    let big_g = rho_to.dot(&g).dot(&rho_from.inv()?);
    let n = big_g.nrows();
    let res = max_abs(&(adjoint(&big_g).dot(&big_g) - identity(n)));
    if res > tol::TRANSITION {
        return Err(Error::NotUnitaryTransition { residual: res });
    }
    Ok(big_g.dot(o).dot(&adjoint(&big_g)))
}

fn find_chart<'a>(charts: &'a [BundleChart], id: &str) -> Result<&'a BundleChart> {
    charts
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| Error::UnknownChart(id.into()))
}

fn find_transition<'a>(
    transitions: &'a [TransitionMap],
    from: &str,
    to: &str,
) -> Result<&'a TransitionMap> {
    transitions
        .iter()
        .find(|t| t.from == from && t.to == to)
        .ok_or_else(|| Error::MissingTransition {
            from: from.into(),
            to: to.into(),
        })
}

fn check_junction_point(left: &[f64], right: &[f64]) -> Result<()> {
    let scale = left
        .iter()
        .chain(right.iter())
        .fold(1.0f64, |acc, x| acc.max(x.abs()));
    let same = left.len() == right.len()
        && left
            .iter()
            .zip(right.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-9 * scale);
    if same {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "curve is discontinuous at a junction: {} vs {}",
            point_str(left),
            point_str(right)
        )))
    }
}

/// Evolve across a multi-segment curve: each segment runs [`total_evolve`] in
/// its chart, and at a chart change the components are mapped by the
/// transition g at the junction point. The junction instant appears twice in
/// the output — last node of the left segment, then first node of the right
/// segment after the handoff.
pub fn multi_patch_evolve(
    curve: &ParamCurve,
    charts: &[BundleChart],
    transitions: &[TransitionMap],
    energy: &ObservableSection,
    psi0: &FiberVector,
    steps_per_segment: usize,
) -> Result<Vec<FiberVector>> {
    let mut out: Vec<FiberVector> = Vec::new();
    let mut current = psi0.clone();
    for (i, seg) in curve.segments.iter().enumerate() {
        let chart = find_chart(charts, &seg.chart_id)?;
        check_junction_point(&(seg.path)(seg.t_start), &current.r)?;
        let traj = total_evolve(chart, seg, energy, &current, steps_per_segment)?;
        current = traj[traj.len() - 1].clone();
        out.extend(traj);
        if i + 1 < curve.segments.len() {
            let next = &curve.segments[i + 1];
            let r_right = (next.path)(next.t_start);
            check_junction_point(&current.r, &r_right)?;
            if next.chart_id != seg.chart_id {
                let tm = find_transition(transitions, &seg.chart_id, &next.chart_id)?;
                let g = (tm.g)(&current.r);
                current = FiberVector {
                    chart_id: next.chart_id.clone(),
                    r: r_right,
                    components: g.dot(&current.components),
                };
            }
        }
    }
    Ok(out)
}

/// Heisenberg-picture observable along a multi-segment curve: 𝔒⁽ᴴ⁾(t) acts in
/// the initial fiber and is built from the cumulative propagator, which picks
/// up the transition factor g at every junction (..g·U_left, and U_right
/// restarts from the identity on the far side). Junction instants appear
/// twice — once per side — so junction matching is a comparison of
/// consecutive entries.
pub fn multi_patch_heisenberg(
    curve: &ParamCurve,
    charts: &[BundleChart],
    transitions: &[TransitionMap],
    energy: &ObservableSection,
    obs: &ObservableSection,
    steps_per_segment: usize,
) -> Result<HeisenbergTrajectory> {
    let first_chart = find_chart(charts, &curve.segments[0].chart_id)?;
    let n = first_chart.fiber_dim;
    let mut v = identity(n);
    let mut v_inv = identity(n);
    let mut times = Vec::new();
    let mut ops = Vec::new();
    for (i, seg) in curve.segments.iter().enumerate() {
        let chart = find_chart(charts, &seg.chart_id)?;
        if chart.fiber_dim != n {
            return Err(Error::DimensionMismatch(format!(
                "fiber dimension changes from {n} to {} at chart {}",
                chart.fiber_dim, chart.id
            )));
        }
        let grid = UniformGrid::new(seg.t_start, seg.t_end, steps_per_segment)?;
        let gen = segment_generator(chart, seg, Some(energy), grid)?;
        let pg = propagate_grid(&gen, grid)?;
        for k in 0..grid.len() {
            let t = grid.time(k);
            let r = (seg.path)(t);
            let o = obs.at(&chart.id, &r)?;
            let fwd = pg.forward[k].dot(&v);
            let bwd = v_inv.dot(&pg.backward[k]);
            times.push(t);
            ops.push(bwd.dot(&o).dot(&fwd));
        }
        v = pg.forward[grid.steps].dot(&v);
        v_inv = v_inv.dot(&pg.backward[grid.steps]);
        if i + 1 < curve.segments.len() {
            let next = &curve.segments[i + 1];
            if next.chart_id != seg.chart_id {
                let tm = find_transition(transitions, &seg.chart_id, &next.chart_id)?;
                let r_tilde = (seg.path)(seg.t_end);
                let g = (tm.g)(&r_tilde);
                let gi = g
                    .inv()
                    .map_err(|_| Error::SingularGauge { point: r_tilde.clone() })?;
                v = g.dot(&v);
                v_inv = v_inv.dot(&gi);
            }
        }
    }
    Ok(HeisenbergTrajectory {
        times,
        ops,
        rep: RepKind::EtaRep,
    })
}
