//! TOML run configuration: which system, which representation, what grid,
//! what to observe, and where the rendered report goes.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! lists, so a config survives a serialize/parse round trip exactly; the
//! effective config is echoed into every output header in this format.

use geqm::linalg::UniformGrid;
use geqm::systems::DriveProfile;
use geqm::{CMatrix, CVector};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A complex number in config space.
pub type C2 = [f64; 2];
/// A row-major complex matrix in config space.
pub type MatrixConfig = Vec<Vec<C2>>;

pub fn complex_from(v: C2) -> Complex64 {
    Complex64::new(v[0], v[1])
}

pub fn vector_from(v: &[C2]) -> CVector {
    Array1::from(v.iter().map(|&x| complex_from(x)).collect::<Vec<_>>())
}

pub fn matrix_from(m: &MatrixConfig) -> Result<CMatrix, CliError> {
    let n = m.len();
    if n == 0 {
        return Err(CliError::Config("matrix must be non-empty".into()));
    }
    if m.iter().any(|row| row.len() != n) {
        return Err(CliError::Config(format!(
            "matrix must be square; got {n} rows of lengths {:?}",
            m.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let flat: Vec<Complex64> = m.iter().flatten().map(|&x| complex_from(x)).collect();
    Ok(Array2::from_shape_vec((n, n), flat).expect("shape matches length"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_representation")]
    pub representation: Representation,
    pub system: SystemConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub observables: Vec<ObservableConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_representation() -> Representation {
    Representation::EtaRep
}

/// Which picture the run reports: the metric representation (state ψ with the
/// evolving η), its Hermitian similarity transform (state ρψ, flat metric), or
/// the bundle evolution along a parameter-space curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    EtaRep,
    HermitianRep,
    Geqm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemConfig {
    /// The 2×2 model H = ε [[0, 1], [4, 0]].
    Intro {
        #[serde(default = "default_one")]
        epsilon: f64,
        #[serde(default)]
        metric: MetricChoice,
    },
    /// Truncated oscillator with a parity drive: H(t) = H₀ + f(t)·𝒫.
    Oscillator {
        #[serde(default = "default_levels")]
        levels: usize,
        #[serde(default = "default_one")]
        omega: f64,
        #[serde(default = "default_one")]
        mass: f64,
        drive: DriveConfig,
    },
    /// The built-in two-chart bundle fixture (2-dimensional fiber over a line).
    Bundle {},
    /// A user-supplied constant Hamiltonian with an optional seed metric.
    Inline {
        hamiltonian: MatrixConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta0: Option<MatrixConfig>,
    },
}

fn default_one() -> f64 {
    1.0
}

fn default_levels() -> usize {
    16
}

/// Seed metric for the intro system: its canonical diag(1, 1/4) or the
/// deliberately naive identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    #[default]
    Canonical,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveConfig {
    Constant {
        value: C2,
    },
    /// f(t) = amplitude · e^{i·frequency·t}
    Exponential {
        amplitude: C2,
        frequency: f64,
    },
    /// Right-continuous steps: values[i] from starts[i] on (values[0] before).
    Piecewise {
        starts: Vec<f64>,
        values: Vec<C2>,
    },
    /// Linear interpolation of values tabulated uniformly on [t0, t1].
    Samples {
        t0: f64,
        t1: f64,
        values: Vec<C2>,
    },
}

impl DriveConfig {
    pub fn to_profile(&self) -> Result<DriveProfile, CliError> {
        let profile = match self {
            Self::Constant { value } => DriveProfile::Constant(complex_from(*value)),
            Self::Exponential { amplitude, frequency } => DriveProfile::Exponential {
                amplitude: complex_from(*amplitude),
                frequency: *frequency,
            },
            Self::Piecewise { starts, values } => DriveProfile::PiecewiseConstant {
                starts: starts.clone(),
                values: values.iter().map(|&v| complex_from(v)).collect(),
            },
            Self::Samples { t0, t1, values } => {
                if values.len() < 2 {
                    return Err(CliError::Config(
                        "sampled drive needs at least two values".into(),
                    ));
                }
                let grid = UniformGrid::new(*t0, *t1, values.len() - 1)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                DriveProfile::Samples {
                    grid,
                    values: values.iter().map(|&v| complex_from(v)).collect(),
                }
            }
        };
        profile
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(profile)
    }

    /// Domain the drive is defined on, when it has one.
    pub(crate) fn covers(&self, t0: f64, t1: f64) -> bool {
        match self {
            Self::Samples { t0: s0, t1: s1, .. } => *s0 <= t0 + 1e-12 && t1 <= *s1 + 1e-12,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl GridConfig {
    pub fn to_core(&self) -> Result<UniformGrid, CliError> {
        if self.steps < 2 {
            return Err(CliError::Config(format!(
                "grid needs at least 2 steps, got {}",
                self.steps
            )));
        }
        UniformGrid::new(self.t0, self.t1, self.steps).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Either a named state (system-specific) or explicit components; both absent
/// means the system's default state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub named: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<C2>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    /// Column label; for named observables also the lookup key.
    pub name: String,
    /// Explicit constant matrix; when absent, `name` must be one of the
    /// system's named observables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Replaces every invariant check's built-in tolerance when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<f64>,
    /// Relative threshold below which an eigenvalue's imaginary part counts
    /// as zero (default 1e-9).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<f64>,
}

impl Tolerances {
    pub fn check_or(&self, default: f64) -> f64 {
        self.check.unwrap_or(default)
    }

    pub fn spectrum_or_default(&self) -> f64 {
        self.spectrum.unwrap_or(1e-9)
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("config serialize: {e}")))
    }

    /// Fiber/state dimension of the configured system.
    pub fn dim(&self) -> usize {
        match &self.system {
            SystemConfig::Intro { .. } => 2,
            SystemConfig::Oscillator { levels, .. } => *levels,
            SystemConfig::Bundle {} => 2,
            SystemConfig::Inline { hamiltonian, .. } => hamiltonian.len(),
        }
    }

    /// Structural validation; everything caught here is a config error
    /// (exit 2), as opposed to numeric failures discovered mid-run (exit 3).
    pub fn validate(&self) -> Result<(), CliError> {
        for v in [self.grid.t0, self.grid.t1] {
            if !v.is_finite() {
                return Err(CliError::Config("grid times must be finite".into()));
            }
        }
        self.grid.to_core()?;
        let dim = self.dim();
        match &self.system {
            SystemConfig::Intro { epsilon, .. } => {
                if !(*epsilon > 0.0) || !epsilon.is_finite() {
                    return Err(CliError::Config(format!(
                        "epsilon must be positive and finite, got {epsilon}"
                    )));
                }
            }
            SystemConfig::Oscillator { levels, omega, mass, drive } => {
                if *levels == 0 {
                    return Err(CliError::Config("oscillator needs at least one level".into()));
                }
                if !(*omega > 0.0) || !(*mass > 0.0) {
                    return Err(CliError::Config(format!(
                        "omega and mass must be positive, got {omega} and {mass}"
                    )));
                }
                drive.to_profile()?;
                if !drive.covers(self.grid.t0, self.grid.t1) {
                    return Err(CliError::Config(
                        "sampled drive does not cover the run grid".into(),
                    ));
                }
            }
            SystemConfig::Bundle {} => {
                if self.representation != Representation::Geqm {
                    return Err(CliError::Config(
                        "the bundle system runs with representation = \"geqm\"".into(),
                    ));
                }
            }
            SystemConfig::Inline { hamiltonian, eta0 } => {
                matrix_from(hamiltonian)?;
                if let Some(e) = eta0 {
                    if matrix_from(e)?.nrows() != dim {
                        return Err(CliError::Config(format!(
                            "eta0 is {}-dimensional but the Hamiltonian is {dim}-dimensional",
                            e.len()
                        )));
                    }
                }
            }
        }
        if self.representation == Representation::Geqm
            && !matches!(self.system, SystemConfig::Bundle {})
        {
            return Err(CliError::Config(
                "representation \"geqm\" requires the bundle system".into(),
            ));
        }
        if self.initial_state.named.is_some() && self.initial_state.vector.is_some() {
            return Err(CliError::Config(
                "initial_state takes either a name or a vector, not both".into(),
            ));
        }
        if let Some(v) = &self.initial_state.vector {
            if v.len() != dim {
                return Err(CliError::Config(format!(
                    "initial vector has {} components, system dimension is {dim}",
                    v.len()
                )));
            }
            if v.iter().flatten().any(|x| !x.is_finite()) {
                return Err(CliError::Config("initial vector must be finite".into()));
            }
            if v.iter().flatten().all(|x| *x == 0.0) {
                return Err(CliError::Config("initial vector must be nonzero".into()));
            }
        }
        for obs in &self.observables {
            match &obs.matrix {
                Some(m) => {
                    if matrix_from(m)?.nrows() != dim {
                        return Err(CliError::Config(format!(
                            "observable {} is {}-dimensional, system dimension is {dim}",
                            obs.name,
                            m.len()
                        )));
                    }
                    if matches!(self.system, SystemConfig::Bundle {}) {
                        return Err(CliError::Config(
                            "the bundle system only takes named observables (chart-dependent sections)"
                                .into(),
                        ));
                    }
                }
                None => {
                    let known: &[&str] = match &self.system {
                        SystemConfig::Intro { .. } => &["hamiltonian"],
                        SystemConfig::Oscillator { .. } => {
                            &["hamiltonian", "parity", "position", "momentum"]
                        }
                        SystemConfig::Bundle {} => &["energy", "observable"],
                        SystemConfig::Inline { .. } => &[],
                    };
                    if !known.contains(&obs.name.as_str()) {
                        return Err(CliError::Config(format!(
                            "unknown observable {:?}; this system names {:?}",
                            obs.name, known
                        )));
                    }
                }
            }
        }
        for t in [self.tolerances.check, self.tolerances.spectrum].into_iter().flatten() {
            if !(t > 0.0) || !t.is_finite() {
                return Err(CliError::Config(format!(
                    "tolerances must be positive and finite, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Fold command-line overrides into the config; the result is the
    /// *effective* config echoed in output headers.
    pub fn with_overrides(
        mut self,
        steps: Option<usize>,
        tol: Option<f64>,
        format: Option<OutputFormat>,
        output: Option<String>,
    ) -> Self {
        if let Some(s) = steps {
            self.grid.steps = s;
        }
        if let Some(t) = tol {
            self.tolerances.check = Some(t);
        }
        if let Some(f) = format {
            self.output.format = f;
        }
        if let Some(p) = output {
            self.output.path = Some(p);
        }
        self
    }
}
