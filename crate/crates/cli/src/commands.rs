//! The three commands behind the binary — integrate a run, check invariants,
//! classify a spectrum — each returning a [`Report`] for the output layer.

use geqm::bundle::{
    connection_hamiltonian, metric_compatibility_residual, multi_patch_evolve,
    multi_patch_heisenberg, patch_compatibility_residual, BundleChart, FiberVector, TransitionMap,
};
use geqm::evolution::{
    dynamical_metric_grid, hermitian_rep, unitarity_residual, unitarity_residual_max,
    unitarity_residual_series,
};
use geqm::linalg::{
    adjoint, cr, eigen, evolve_state, hermiticity_residual, max_abs, propagate,
    TimeDependentOperator, UniformGrid,
};
use geqm::metric::{is_pseudo_hermitian, spectral_metric, MetricOperator};
use geqm::systems::{
    two_chart_bundle, DriveProfile, IntroSystem, OscillatorParitySystem, TwoChartBundle,
};
use geqm::{CMatrix, CVector};
use ndarray::Array1;
use num_complex::Complex64;

use crate::config::{
    matrix_from, vector_from, MetricChoice, Representation, RunConfig, SystemConfig,
};
use crate::CliError;

/// One rendered column: grid-node numbers, or labels (spectrum classes).
#[derive(Debug, Clone)]
pub enum Column {
    Num(Vec<f64>),
    Text(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Num(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

/// What a command produced: a time/eigenvalue series, an invariant report, or
/// both empty on the unused side. The effective config rides along so the
/// output layer can echo it.
#[derive(Debug, Clone)]
pub struct Report {
    pub config: RunConfig,
    pub series: Vec<(String, Column)>,
    pub checks: Vec<CheckResult>,
}

fn flat_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn basis_state(dim: usize, k: usize) -> CVector {
    let mut v = Array1::zeros(dim);
    v[k] = Complex64::new(1.0, 0.0);
    v
}

// ---------------------------------------------------------------------------
// run

/// A vector-space system reduced to what the run loop consumes.
struct VectorSystem {
    h: TimeDependentOperator,
    eta0: MetricOperator,
    dim: usize,
    default_state: CVector,
    osc: Option<OscillatorParitySystem>,
}

fn build_vector_system(cfg: &RunConfig, grid: UniformGrid) -> Result<VectorSystem, CliError> {
    match &cfg.system {
        SystemConfig::Intro { epsilon, metric } => {
            let sys = IntroSystem::new(*epsilon).map_err(|e| CliError::Config(e.to_string()))?;
            let eta0 = match metric {
                MetricChoice::Canonical => sys.canonical_metric(),
                MetricChoice::Identity => MetricOperator::identity(2),
            };
            Ok(VectorSystem {
                h: TimeDependentOperator::constant(grid.t0, grid.t1, sys.hamiltonian()),
                eta0,
                dim: 2,
                default_state: sys.chi(),
                osc: None,
            })
        }
        SystemConfig::Oscillator { levels, omega, mass, drive } => {
            let sys =
                OscillatorParitySystem::new(*levels, *omega, *mass, drive.to_profile()?, grid)
                    .map_err(|e| CliError::Config(e.to_string()))?;
            Ok(VectorSystem {
                h: sys.hamiltonian(),
                eta0: MetricOperator::identity(*levels),
                dim: *levels,
                default_state: basis_state(*levels, 0),
                osc: Some(sys),
            })
        }
        SystemConfig::Inline { hamiltonian, eta0 } => {
            let hm = matrix_from(hamiltonian)?;
            let dim = hm.nrows();
            let eta = match eta0 {
                Some(e) => MetricOperator::new(&matrix_from(e)?)?,
                None => MetricOperator::identity(dim),
            };
            Ok(VectorSystem {
                h: TimeDependentOperator::constant(grid.t0, grid.t1, hm),
                eta0: eta,
                dim,
                default_state: basis_state(dim, 0),
                osc: None,
            })
        }
        SystemConfig::Bundle {} => unreachable!("bundle runs go through run_bundle"),
    }
}

fn resolve_initial(cfg: &RunConfig, dim: usize, default: &CVector) -> Result<CVector, CliError> {
    if let Some(v) = &cfg.initial_state.vector {
        return Ok(vector_from(v));
    }
    match cfg.initial_state.named.as_deref() {
        None | Some("default") => Ok(default.clone()),
        Some("chi") if matches!(cfg.system, SystemConfig::Intro { .. }) => {
            Ok(default.clone())
        }
        Some("ground") => Ok(basis_state(dim, 0)),
        Some(name) => {
            if let Some(k) = name.strip_prefix("basis").and_then(|s| s.parse::<usize>().ok()) {
                if k < dim {
                    return Ok(basis_state(dim, k));
                }
                return Err(CliError::Config(format!(
                    "state {name} out of range for dimension {dim}"
                )));
            }
            Err(CliError::Config(format!("unknown initial state {name:?}")))
        }
    }
}

/// An observable as the run loop sees it: a fixed matrix or one rebuilt per
/// node (the oscillator's drive-dependent operators).
enum ObsEval {
    Constant(CMatrix),
    OscHamiltonian { h0: CMatrix, parity: CMatrix, drive: DriveProfile },
    OscPosition,
    OscMomentum,
}

impl ObsEval {
    fn at(
        &self,
        osc: Option<&OscillatorParitySystem>,
        grid: UniformGrid,
        t: f64,
    ) -> Result<CMatrix, CliError> {
        match self {
            ObsEval::Constant(m) => Ok(m.clone()),
            ObsEval::OscHamiltonian { h0, parity, drive } => Ok(h0 + &(parity * drive.eval(t))),
            ObsEval::OscPosition | ObsEval::OscMomentum => {
                let sys = osc.expect("oscillator observables only exist for that system");
                let (x, p) = sys.metric_position_momentum(grid.t0, t, grid.steps.max(16))?;
                Ok(match self {
                    ObsEval::OscPosition => x,
                    _ => p,
                })
            }
        }
    }
}

fn resolve_observables(cfg: &RunConfig, vs: &VectorSystem) -> Result<Vec<(String, ObsEval)>, CliError> {
    let mut out = Vec::new();
    for obs in &cfg.observables {
        let eval = match &obs.matrix {
            Some(m) => ObsEval::Constant(matrix_from(m)?),
            None => match (&cfg.system, obs.name.as_str()) {
                (SystemConfig::Intro { epsilon, .. }, "hamiltonian") => ObsEval::Constant(
                    IntroSystem::new(*epsilon)
                        .map_err(|e| CliError::Config(e.to_string()))?
                        .hamiltonian(),
                ),
                (SystemConfig::Oscillator { .. }, name) => {
                    let sys = vs.osc.as_ref().expect("oscillator system was just built");
                    match name {
                        "hamiltonian" => ObsEval::OscHamiltonian {
                            h0: sys.h0(),
                            parity: sys.parity(),
                            drive: sys.drive.clone(),
                        },
                        "parity" => ObsEval::Constant(sys.parity()),
                        "position" => ObsEval::OscPosition,
                        "momentum" => ObsEval::OscMomentum,
                        _ => unreachable!("validate() only admits known names"),
                    }
                }
                _ => unreachable!("validate() only admits known names"),
            },
        };
        out.push((obs.name.clone(), eval));
    }
    Ok(out)
}

fn run_vector_system(cfg: &RunConfig) -> Result<Report, CliError> {
    let grid = cfg.grid.to_core()?;
    let vs = build_vector_system(cfg, grid)?;
    let psi0 = resolve_initial(cfg, vs.dim, &vs.default_state)?;
    let observables = resolve_observables(cfg, &vs)?;
    let metrics = dynamical_metric_grid(&vs.h, &vs.eta0, grid)?;
    let flat = MetricOperator::identity(vs.dim);

    // `flat_rep` marks the Hermitian picture, whose carrier metric is the
    // identity; observables are conjugated into it so the expectation columns
    // mean the same thing in both pictures.
    let (states, flat_rep, unit_res) = match cfg.representation {
        Representation::EtaRep => {
            let traj = evolve_state(&vs.h, &psi0, grid)?;
            let unit = unitarity_residual_series(&vs.h, &metrics, grid)?;
            (traj.states, false, unit)
        }
        Representation::HermitianRep => {
            let herm = hermitian_rep(&vs.h, &metrics, grid)?;
            let phi0 = metrics[0].rho.dot(&psi0);
            let traj = evolve_state(&herm, &phi0, grid)?;
            let unit = herm.sample_on(&grid)?.iter().map(hermiticity_residual).collect();
            (traj.states, true, unit)
        }
        Representation::Geqm => unreachable!("validate() pairs geqm with the bundle system"),
    };

    let n = grid.len();
    let mut series: Vec<(String, Column)> = Vec::new();
    series.push(("time".into(), Column::Num(grid.times())));
    for i in 0..vs.dim {
        series.push((
            format!("state{i}_re"),
            Column::Num(states.iter().map(|s| s[i].re).collect()),
        ));
        series.push((
            format!("state{i}_im"),
            Column::Num(states.iter().map(|s| s[i].im).collect()),
        ));
    }
    let eta_norm: Vec<f64> = (0..n)
        .map(|k| {
            if flat_rep {
                flat_norm(&states[k])
            } else {
                metrics[k].norm(&states[k])
            }
        })
        .collect();
    series.push(("eta_norm".into(), Column::Num(eta_norm)));
    series.push((
        "euclid_norm".into(),
        Column::Num(states.iter().map(flat_norm).collect()),
    ));
    for (name, ev) in &observables {
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for k in 0..n {
            let op = ev.at(vs.osc.as_ref(), grid, grid.time(k))?;
            let val = if flat_rep {
                let op_h = metrics[k].rho.dot(&op).dot(&metrics[k].rho_inv);
                flat.expectation(&op_h, &states[k])?
            } else {
                metrics[k].expectation(&op, &states[k])?
            };
            re.push(val.re);
            im.push(val.im);
        }
        series.push((format!("{name}_re"), Column::Num(re)));
        series.push((format!("{name}_im"), Column::Num(im)));
    }
    series.push(("unitarity_residual".into(), Column::Num(unit_res)));

    Ok(Report {
        config: cfg.clone(),
        series,
        checks: Vec::new(),
    })
}

fn find_chart<'a>(fx: &'a TwoChartBundle, id: &str) -> &'a BundleChart {
    fx.charts
        .iter()
        .find(|c| c.id == id)
        .expect("fixture charts cover the fixture curve")
}

fn find_transition<'a>(fx: &'a TwoChartBundle, from: &str, to: &str) -> &'a TransitionMap {
    fx.transitions
        .iter()
        .find(|t| t.from == from && t.to == to)
        .expect("fixture ships transitions both ways")
}

fn run_bundle(cfg: &RunConfig) -> Result<Report, CliError> {
    let fx = two_chart_bundle();
    let (t_start, t_end) = (fx.curve.t_start(), fx.curve.t_end());
    if (cfg.grid.t0 - t_start).abs() > 1e-9 || (cfg.grid.t1 - t_end).abs() > 1e-9 {
        return Err(CliError::Config(format!(
            "grid [{}, {}] must match the fixture curve span [{t_start}, {t_end}]",
            cfg.grid.t0, cfg.grid.t1
        )));
    }
    let steps = cfg.grid.steps;
    let psi0 = match (cfg.initial_state.named.as_deref(), &cfg.initial_state.vector) {
        (_, Some(v)) => {
            let seg = &fx.curve.segments[0];
            FiberVector {
                chart_id: seg.chart_id.clone(),
                r: (seg.path)(seg.t_start),
                components: vector_from(v),
            }
        }
        (None | Some("default") | Some("fixture"), None) => fx.initial.clone(),
        (Some(name), None) => {
            return Err(CliError::Config(format!(
                "unknown initial state {name:?}; the bundle system takes \"fixture\" or a vector"
            )))
        }
    };
    let traj = multi_patch_evolve(&fx.curve, &fx.charts, &fx.transitions, &fx.energy, &psi0, steps)?;

    let dim = psi0.components.len();
    let rows = traj.len();
    let mut time = Vec::with_capacity(rows);
    let mut state_cols = vec![(Vec::with_capacity(rows), Vec::with_capacity(rows)); dim];
    let mut eta_norm = Vec::with_capacity(rows);
    let mut euclid = Vec::with_capacity(rows);
    let mut obs_cols: Vec<(Vec<f64>, Vec<f64>)> =
        vec![(Vec::with_capacity(rows), Vec::with_capacity(rows)); cfg.observables.len()];
    let mut unit = Vec::with_capacity(rows);

    let mut idx = 0;
    for seg in &fx.curve.segments {
        let sgrid = UniformGrid::new(seg.t_start, seg.t_end, steps)?;
        for k in 0..sgrid.len() {
            let fv = &traj[idx];
            idx += 1;
            let t = sgrid.time(k);
            let chart = find_chart(&fx, &fv.chart_id);
            let em = chart.eta_at(&fv.r)?;
            time.push(t);
            for (i, col) in state_cols.iter_mut().enumerate() {
                col.0.push(fv.components[i].re);
                col.1.push(fv.components[i].im);
            }
            eta_norm.push(em.norm(&fv.components));
            euclid.push(flat_norm(&fv.components));
            for (obs, col) in cfg.observables.iter().zip(obs_cols.iter_mut()) {
                let section = match obs.name.as_str() {
                    "energy" => &fx.energy,
                    _ => &fx.observable,
                };
                let op = section.at(&fv.chart_id, &fv.r)?;
                let val = em.expectation(&op, &fv.components)?;
                col.0.push(val.re);
                col.1.push(val.im);
            }
            let r_dot = (seg.velocity)(t);
            let gen = connection_hamiltonian(chart, &fv.r, &r_dot) + fx.energy.at(&fv.chart_id, &fv.r)?;
            let grads = chart.eta_grad_at(&fv.r);
            let mut eta_dot = &grads[0] * cr(r_dot[0]);
            for a in 1..grads.len() {
                eta_dot = eta_dot + &grads[a] * cr(r_dot[a]);
            }
            unit.push(unitarity_residual(&gen, &em, &eta_dot));
        }
    }

    let mut series: Vec<(String, Column)> = Vec::new();
    series.push(("time".into(), Column::Num(time)));
    for (i, (re, im)) in state_cols.into_iter().enumerate() {
        series.push((format!("state{i}_re"), Column::Num(re)));
        series.push((format!("state{i}_im"), Column::Num(im)));
    }
    series.push(("eta_norm".into(), Column::Num(eta_norm)));
    series.push(("euclid_norm".into(), Column::Num(euclid)));
    for (obs, (re, im)) in cfg.observables.iter().zip(obs_cols) {
        series.push((format!("{}_re", obs.name), Column::Num(re)));
        series.push((format!("{}_im", obs.name), Column::Num(im)));
    }
    series.push(("unitarity_residual".into(), Column::Num(unit)));

    Ok(Report {
        config: cfg.clone(),
        series,
        checks: Vec::new(),
    })
}

/// Integrate the configured system and collect its time series: state
/// components, both norms, expectation values, and the instantaneous
/// unitarity residual.
pub fn cmd_run(cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match cfg.system {
        SystemConfig::Bundle {} => run_bundle(cfg),
        _ => run_vector_system(cfg),
    }
}

// ---------------------------------------------------------------------------
// check

fn intro_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>, CliError> {
    let SystemConfig::Intro { epsilon, metric } = &cfg.system else {
        unreachable!()
    };
    let sys = IntroSystem::new(*epsilon).map_err(|e| CliError::Config(e.to_string()))?;
    let h = sys.hamiltonian();
    let canonical = sys.canonical_metric();
    let chosen = match metric {
        MetricChoice::Canonical => sys.canonical_metric(),
        MetricChoice::Identity => MetricOperator::identity(2),
    };
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();

    let es = eigen(&h)?;
    let mut vals: Vec<Complex64> = es.values.iter().cloned().collect();
    vals.sort_by(|a, b| a.re.total_cmp(&b.re));
    let two_eps = 2.0 * epsilon;
    let res = (vals[0] + cr(two_eps))
        .norm()
        .max((vals[1] - cr(two_eps)).norm());
    checks.push(CheckResult::new(
        "eigenvalues_plus_minus_two_epsilon",
        res / two_eps.max(1.0),
        tol.check_or(1e-12),
    ));

    let (_, res) = is_pseudo_hermitian(&h, &chosen, 1e-10);
    checks.push(CheckResult::new(
        "pseudo_hermitian_wrt_configured_metric",
        res,
        tol.check_or(1e-10),
    ));

    let spec = spectral_metric(&es)?;
    let ratio = spec.eta[(0, 0)].re / canonical.eta[(0, 0)].re;
    let res = max_abs(&(&spec.eta - &(&canonical.eta * cr(ratio)))) / ratio.abs().max(1.0);
    checks.push(CheckResult::new(
        "spectral_metric_proportional_to_canonical",
        res,
        tol.check_or(1e-10),
    ));

    let mut worst = 0.0f64;
    for j in 1..=8 {
        let x = j as f64;
        let xi = Array1::from(vec![
            Complex64::new(x.cos(), (2.0 * x).sin()),
            Complex64::new((3.0 * x).sin(), (5.0 * x).cos()),
        ]);
        let got = sys.expectation(&xi, Some(&canonical))?;
        let want = sys.eta_expectation_closed_form(&xi)?;
        worst = worst.max((got.re - want).abs()).max(got.im.abs());
    }
    checks.push(CheckResult::new(
        "eta_expectation_closed_form",
        worst,
        tol.check_or(1e-10),
    ));

    // Flat-norm growth of χ at t = 0: the curvature term makes the forward
    // difference overshoot by O(Δt), well inside the 1% gate.
    let span = 1e-3;
    let fd_grid = UniformGrid::new(0.0, span, 8)?;
    let hop = TimeDependentOperator::constant(0.0, span, h.clone());
    let traj = evolve_state(&hop, &sys.chi(), fd_grid)?;
    let slope = (traj.states[8].iter().map(|z| z.norm_sqr()).sum::<f64>()
        - traj.states[0].iter().map(|z| z.norm_sqr()).sum::<f64>())
        / span;
    let res = (slope / (3.0 * epsilon) - 1.0).abs();
    checks.push(CheckResult::new(
        "norm_growth_slope_three_epsilon",
        res,
        tol.check_or(0.01),
    ));

    Ok(checks)
}

fn oscillator_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>, CliError> {
    let grid = cfg.grid.to_core()?;
    let vs = build_vector_system(cfg, grid)?;
    let sys = vs.osc.as_ref().expect("oscillator checks run on that system");
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();

    let cf = sys.closed_forms_grid(&grid);
    let last = cf.last().expect("grids are never empty");

    let u_num = propagate(&vs.h, grid.t0, grid.t1, grid.steps)?;
    checks.push(CheckResult::new(
        "propagator_matches_closed_form",
        max_abs(&(&u_num - &last.u)),
        tol.check_or(1e-6),
    ));

    let metrics = dynamical_metric_grid(&vs.h, &vs.eta0, grid)?;
    let res = (0..grid.len())
        .map(|k| max_abs(&(&metrics[k].eta - &cf[k].eta)))
        .fold(0.0, f64::max);
    checks.push(CheckResult::new(
        "dynamical_metric_matches_closed_form",
        res,
        tol.check_or(1e-6),
    ));

    let herm = hermitian_rep(&vs.h, &metrics, grid)?;
    let hs = herm.sample_on(&grid)?;
    let res = (0..grid.len())
        .map(|k| max_abs(&(&hs[k] - &cf[k].h)))
        .fold(0.0, f64::max);
    checks.push(CheckResult::new(
        "hermitian_rep_matches_closed_form",
        res,
        tol.check_or(1e-6),
    ));

    let psi = basis_state(vs.dim, 0);
    let phi = if vs.dim > 1 {
        let mut v = basis_state(vs.dim, 1);
        v[0] = Complex64::new(0.6, 0.0);
        v[1] = Complex64::new(0.0, -0.8);
        v
    } else {
        psi.clone()
    };
    let pt = evolve_state(&vs.h, &psi, grid)?;
    let ft = evolve_state(&vs.h, &phi, grid)?;
    let want = metrics[0].inner(&pt.states[0], &ft.states[0]);
    let res = (0..grid.len())
        .map(|k| (metrics[k].inner(&pt.states[k], &ft.states[k]) - want).norm())
        .fold(0.0, f64::max);
    checks.push(CheckResult::new(
        "eta_inner_product_constant",
        res,
        tol.check_or(1e-7),
    ));

    checks.push(CheckResult::new(
        "unitarity_residual_dynamical_metric",
        unitarity_residual_max(&vs.h, &metrics, grid)?,
        tol.check_or(1e-6),
    ));

    let mut got: Vec<Complex64> = eigen(&vs.h.eval(grid.t1))?.values.iter().cloned().collect();
    let mut want = sys.spectrum_at(grid.t1);
    got.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    want.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let res = got
        .iter()
        .zip(&want)
        .map(|(g, w)| (g - w).norm())
        .fold(0.0, f64::max);
    checks.push(CheckResult::new(
        "spectrum_matches_closed_form",
        res,
        tol.check_or(1e-9),
    ));

    Ok(checks)
}

fn bundle_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>, CliError> {
    let fx = two_chart_bundle();
    let steps = cfg.grid.steps;
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();

    let east_id = fx.curve.segments[0].chart_id.clone();
    let west_id = fx.curve.segments[1].chart_id.clone();
    let east = find_chart(&fx, &east_id);
    let west = find_chart(&fx, &west_id);
    let junction = (fx.curve.segments[1].path)(fx.curve.segments[1].t_start);

    let mut res = 0.0f64;
    for r in [[0.3], [0.9], [1.5]] {
        res = res.max(metric_compatibility_residual(east, &r)?);
    }
    for r in [[1.8], [2.4], [2.9]] {
        res = res.max(metric_compatibility_residual(west, &r)?);
    }
    checks.push(CheckResult::new(
        "metric_connection_compatibility",
        res,
        tol.check_or(1e-8),
    ));

    let tm = find_transition(&fx, &east_id, &west_id);
    let mut res = 0.0f64;
    for r in [[1.2], [1.65], [2.4], [3.0]] {
        let g = (tm.g)(&r);
        let eta_from = east.eta_matrix(&r);
        let eta_to = west.eta_matrix(&r);
        let diff = adjoint(&g).dot(&eta_to).dot(&g) - &eta_from;
        res = res.max(max_abs(&diff) / max_abs(&eta_from).max(1.0));
    }
    checks.push(CheckResult::new(
        "transition_is_metric_unitary",
        res,
        tol.check_or(1e-8),
    ));

    let mut res = 0.0f64;
    for r in [junction.clone(), vec![2.2]] {
        res = res.max(patch_compatibility_residual(tm, east, west, &r)?);
    }
    checks.push(CheckResult::new(
        "patch_connection_compatibility",
        res,
        tol.check_or(1e-6),
    ));

    let traj = multi_patch_evolve(&fx.curve, &fx.charts, &fx.transitions, &fx.energy, &fx.initial, steps)?;
    let left = &traj[steps];
    let right = &traj[steps + 1];
    let em_l = find_chart(&fx, &left.chart_id).eta_at(&left.r)?;
    let em_r = find_chart(&fx, &right.chart_id).eta_at(&right.r)?;
    checks.push(CheckResult::new(
        "junction_norm_continuity",
        (em_l.norm(&left.components) - em_r.norm(&right.components)).abs(),
        tol.check_or(1e-8),
    ));
    let e_l = em_l
        .expectation(&fx.energy.at(&left.chart_id, &left.r)?, &left.components)?
        .re;
    let e_r = em_r
        .expectation(&fx.energy.at(&right.chart_id, &right.r)?, &right.components)?
        .re;
    checks.push(CheckResult::new(
        "junction_energy_continuity",
        (e_l - e_r).abs(),
        tol.check_or(1e-8),
    ));

    let ht = multi_patch_heisenberg(&fx.curve, &fx.charts, &fx.transitions, &fx.energy, &fx.observable, steps)?;
    let eta0 = east.eta_at(&fx.initial.r)?;
    let mut res = 0.0f64;
    for (i, fv) in traj.iter().enumerate() {
        let em = find_chart(&fx, &fv.chart_id).eta_at(&fv.r)?;
        let op = fx.observable.at(&fv.chart_id, &fv.r)?;
        let schrodinger = em.expectation(&op, &fv.components)?.re;
        let heisenberg = eta0.expectation(&ht.ops[i], &fx.initial.components)?.re;
        res = res.max((schrodinger - heisenberg).abs());
    }
    checks.push(CheckResult::new(
        "heisenberg_matches_schrodinger",
        res,
        tol.check_or(1e-7),
    ));

    Ok(checks)
}

fn inline_checks(cfg: &RunConfig) -> Result<Vec<CheckResult>, CliError> {
    let grid = cfg.grid.to_core()?;
    let vs = build_vector_system(cfg, grid)?;
    let tol = &cfg.tolerances;
    let mut checks = Vec::new();

    let h0 = vs.h.eval(grid.t0);
    let (_, res) = is_pseudo_hermitian(&h0, &vs.eta0, 1e-10);
    checks.push(CheckResult::new(
        "pseudo_hermitian_wrt_eta0",
        res,
        tol.check_or(1e-10),
    ));

    let es = eigen(&h0)?;
    let scale = es.values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let res = es.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale;
    checks.push(CheckResult::new("real_spectrum", res, tol.check_or(1e-10)));

    let metrics = dynamical_metric_grid(&vs.h, &vs.eta0, grid)?;
    checks.push(CheckResult::new(
        "unitarity_residual_dynamical_metric",
        unitarity_residual_max(&vs.h, &metrics, grid)?,
        tol.check_or(1e-6),
    ));

    Ok(checks)
}

/// Run the invariant suite for the configured system. Every result is
/// reported; the caller decides what a failure means (the binary exits 1).
pub fn cmd_check(cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let checks = match &cfg.system {
        SystemConfig::Intro { .. } => intro_checks(cfg)?,
        SystemConfig::Oscillator { .. } => oscillator_checks(cfg)?,
        SystemConfig::Bundle {} => bundle_checks(cfg)?,
        SystemConfig::Inline { .. } => inline_checks(cfg)?,
    };
    Ok(Report {
        config: cfg.clone(),
        series: Vec::new(),
        checks,
    })
}

// ---------------------------------------------------------------------------
// spectrum

fn classify(values: &CVector, ctol: f64) -> (Vec<Complex64>, Vec<&'static str>) {
    let mut vals: Vec<Complex64> = values.iter().cloned().collect();
    vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let scale = vals.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let n = vals.len();
    let mut class: Vec<Option<&'static str>> = vec![None; n];
    for (i, v) in vals.iter().enumerate() {
        if v.im.abs() <= ctol * scale {
            class[i] = Some("real");
        }
    }
    for i in 0..n {
        if class[i].is_some() {
            continue;
        }
        for j in (i + 1)..n {
            if class[j].is_none() && (vals[j] - vals[i].conj()).norm() <= ctol * scale {
                class[i] = Some("conjugate-pair");
                class[j] = Some("conjugate-pair");
                break;
            }
        }
    }
    let class = class
        .into_iter()
        .map(|c| c.unwrap_or("unpaired-complex"))
        .collect();
    (vals, class)
}

/// Eigenvalues of the system's generator at time `t` (grid start when absent),
/// each labeled real, conjugate-pair, or unpaired-complex.
pub fn cmd_spectrum(cfg: &RunConfig, t: Option<f64>) -> Result<Report, CliError> {
    cfg.validate()?;
    let t = t.unwrap_or(cfg.grid.t0);
    if !t.is_finite() {
        return Err(CliError::Config(format!("evaluation time must be finite, got {t}")));
    }
    let m: CMatrix = match &cfg.system {
        SystemConfig::Intro { epsilon, .. } => IntroSystem::new(*epsilon)
            .map_err(|e| CliError::Config(e.to_string()))?
            .hamiltonian(),
        SystemConfig::Oscillator { levels, omega, mass, drive } => {
            let profile = drive.to_profile()?;
            if !drive.covers(t, t) {
                return Err(CliError::Config(format!("the sampled drive is undefined at t = {t}")));
            }
            let grid = cfg.grid.to_core()?;
            let sys = OscillatorParitySystem::new(*levels, *omega, *mass, profile, grid)
                .map_err(|e| CliError::Config(e.to_string()))?;
            &sys.h0() + &(&sys.parity() * sys.drive.eval(t))
        }
        SystemConfig::Bundle {} => {
            let fx = two_chart_bundle();
            let seg = fx
                .curve
                .segments
                .iter()
                .find(|s| s.t_start <= t && t <= s.t_end)
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "t = {t} lies outside the fixture curve [{}, {}]",
                        fx.curve.t_start(),
                        fx.curve.t_end()
                    ))
                })?;
            let r = (seg.path)(t);
            fx.energy.at(&seg.chart_id, &r)?
        }
        SystemConfig::Inline { hamiltonian, .. } => matrix_from(hamiltonian)?,
    };
    let es = eigen(&m)?;
    let (vals, classes) = classify(&es.values, cfg.tolerances.spectrum_or_default());
    let series = vec![
        (
            "eigenvalue_re".to_string(),
            Column::Num(vals.iter().map(|z| z.re).collect()),
        ),
        (
            "eigenvalue_im".to_string(),
            Column::Num(vals.iter().map(|z| z.im).collect()),
        ),
        (
            "class".to_string(),
            Column::Text(classes.iter().map(|s| s.to_string()).collect()),
        ),
    ];
    Ok(Report {
        config: cfg.clone(),
        series,
        checks: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn intro_cfg(metric: &str) -> RunConfig {
        RunConfig::from_toml_str(&format!(
            r#"
                [system]
                kind = "intro"
                metric = "{metric}"
                [grid]
                t0 = 0.0
                t1 = 1.0
                steps = 200
                [[observables]]
                name = "hamiltonian"
            "#
        ))
        .unwrap()
    }

    fn column<'a>(report: &'a Report, name: &str) -> &'a [f64] {
        match report
            .series
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
        {
            Some(Column::Num(v)) => v,
            _ => panic!("missing numeric column {name}"),
        }
    }

    #[test]
    fn intro_run_conserves_the_metric_norm_but_not_the_flat_one() {
        let report = cmd_run(&intro_cfg("canonical")).unwrap();
        let eta = column(&report, "eta_norm");
        let flat = column(&report, "euclid_norm");
        let drift = eta
            .iter()
            .map(|v| (v - eta[0]).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-9, "eta-norm drift {drift:.3e}");
        // ∂_t ‖ψ‖² at t = 0 is 3ε for the stock state χ.
        let t = column(&report, "time");
        let slope = (flat[1].powi(2) - flat[0].powi(2)) / (t[1] - t[0]);
        assert!((slope - 3.0).abs() < 0.05, "flat-norm slope {slope}");
        // The expectation of H in the metric picture stays put (H is its own
        // Heisenberg image here), and stays real.
        let h_im = column(&report, "hamiltonian_im");
        assert!(h_im.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn intro_check_suite_passes_with_the_canonical_metric() {
        let report = cmd_check(&intro_cfg("canonical")).unwrap();
        assert_eq!(report.checks.len(), 5);
        for c in &report.checks {
            assert!(c.pass, "{}: residual {:.3e} > tol {:.1e}", c.name, c.residual, c.tolerance);
        }
    }

    #[test]
    fn intro_check_flags_the_identity_metric_claim() {
        let report = cmd_check(&intro_cfg("identity")).unwrap();
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).collect();
        assert_eq!(failed.len(), 1, "exactly the metric claim should fail");
        assert_eq!(failed[0].name, "pseudo_hermitian_wrt_configured_metric");
        assert!(failed[0].residual > 1.0);
    }

    #[test]
    fn hermitian_rep_run_reports_flat_norms_and_matching_expectations() {
        let mut cfg = intro_cfg("canonical");
        cfg.representation = Representation::HermitianRep;
        let flat_report = cmd_run(&cfg).unwrap();
        let eta_report = cmd_run(&intro_cfg("canonical")).unwrap();
        // Same physical expectation values in both pictures.
        let a = column(&flat_report, "hamiltonian_re");
        let b = column(&eta_report, "hamiltonian_re");
        let diff = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "picture mismatch {diff:.3e}");
        // In the Hermitian picture the carrier metric is the identity.
        let eta = column(&flat_report, "eta_norm");
        let euclid = column(&flat_report, "euclid_norm");
        assert_eq!(eta, euclid);
    }

    #[test]
    fn bundle_run_reports_doubled_junction_rows() {
        let cfg = RunConfig::from_toml_str(
            r#"
                representation = "geqm"
                [system]
                kind = "bundle"
                [grid]
                t0 = 0.0
                t1 = 1.0
                steps = 100
                [[observables]]
                name = "energy"
            "#,
        )
        .unwrap();
        let report = cmd_run(&cfg).unwrap();
        let t = column(&report, "time");
        assert_eq!(t.len(), 2 * 101);
        // The junction instant appears twice, once per chart.
        assert_eq!(t[100], t[101]);
        let eta = column(&report, "eta_norm");
        assert!((eta[100] - eta[101]).abs() < 1e-8);
        let e = column(&report, "energy_re");
        assert!((e[100] - e[101]).abs() < 1e-8);
        // The full generator solves the unitarity condition along the curve.
        let unit = column(&report, "unitarity_residual");
        assert!(unit.iter().all(|v| *v < 1e-6), "max {:.3e}", unit.iter().fold(0.0f64, |a, b| a.max(*b)));
    }

    #[test]
    fn spectrum_classifies_all_three_ways() {
        let intro = cmd_spectrum(&intro_cfg("canonical"), None).unwrap();
        let classes = match &intro.series[2].1 {
            Column::Text(v) => v.clone(),
            _ => panic!("class column"),
        };
        assert_eq!(classes, vec!["real", "real"]);

        // A real rotation generator has a conjugate pair.
        let rot = RunConfig::from_toml_str(
            r#"
                [system]
                kind = "inline"
                hamiltonian = [[[0.0, 0.0], [1.0, 0.0]], [[-1.0, 0.0], [0.0, 0.0]]]
                [grid]
                t0 = 0.0
                t1 = 1.0
                steps = 10
            "#,
        )
        .unwrap();
        let report = cmd_spectrum(&rot, None).unwrap();
        let classes = match &report.series[2].1 {
            Column::Text(v) => v.clone(),
            _ => panic!("class column"),
        };
        assert_eq!(classes, vec!["conjugate-pair", "conjugate-pair"]);

        // A complex constant drive breaks conjugate pairing entirely.
        let osc = RunConfig::from_toml_str(
            r#"
                [system]
                kind = "oscillator"
                levels = 4
                [system.drive]
                kind = "constant"
                value = [1.0, 1.0]
                [grid]
                t0 = 0.0
                t1 = 1.0
                steps = 10
            "#,
        )
        .unwrap();
        let report = cmd_spectrum(&osc, None).unwrap();
        let classes = match &report.series[2].1 {
            Column::Text(v) => v.clone(),
            _ => panic!("class column"),
        };
        assert!(classes.iter().all(|c| c == "unpaired-complex"), "{classes:?}");
    }

    #[test]
    fn oscillator_check_suite_passes_on_defaults() {
        let cfg = RunConfig::from_toml_str(
            r#"
                [system]
                kind = "oscillator"
                [system.drive]
                kind = "exponential"
                amplitude = [0.2, 0.3]
                frequency = 1.3
                [grid]
                t0 = 0.0
                t1 = 1.0
                steps = 1000
            "#,
        )
        .unwrap();
        let report = cmd_check(&cfg).unwrap();
        assert_eq!(report.checks.len(), 6);
        for c in &report.checks {
            assert!(c.pass, "{}: residual {:.3e} > tol {:.1e}", c.name, c.residual, c.tolerance);
        }
    }
}
