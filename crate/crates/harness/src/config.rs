//! TOML experiment configuration.
//!
//! Every section has defaults for the standard experiment set, so an empty
//! file (or no file) is a complete configuration. A `[model]` block, when
//! given, must spell out the drive, the three rates and the spin; `omega`,
//! `c_q` and `beta` default to 0.

use std::collections::BTreeSet;
use std::path::Path;

use qgyro_core::dynamics::FeedbackConfig;
use qgyro_core::liouvillian::ModelParams;
use qgyro_core::spectral::{WindowRegistry, DEFAULT_PEAK_THRESHOLD};
use qgyro_core::spin::{DensityMatrix, Operator, SpinQuantumNumber};
use qgyro_core::steady::{Grid, SweepAxis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Large-quadrupole configuration used for the multi-frequency runs.
pub mod large_cq {
    pub const C_Q: f64 = 0.495;
    pub const GAMMA1: f64 = 0.05;
    pub const GAMMA2: f64 = 0.005;
    pub const GAMMA_P: f64 = 0.005;
    pub const T_END: f64 = 800.0;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "ModelParams::base")]
    pub model: ModelParams,
    #[serde(default)]
    pub kcurves: KCurvesConfig,
    #[serde(default)]
    pub shift_sweep: ShiftSweepConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub properties: PropertiesConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            model: ModelParams::base(),
            kcurves: KCurvesConfig::default(),
            shift_sweep: ShiftSweepConfig::default(),
            dynamics: DynamicsConfig::default(),
            properties: PropertiesConfig::default(),
        }
    }
}

/// Partial model parameters layered over `[model]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_p: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, base: &ModelParams) -> ModelParams {
        ModelParams {
            c_q: self.c_q.unwrap_or(base.c_q),
            omega_d: self.omega_d.unwrap_or(base.omega_d),
            beta: self.beta.unwrap_or(base.beta),
            gamma1: self.gamma1.unwrap_or(base.gamma1),
            gamma2: self.gamma2.unwrap_or(base.gamma2),
            gamma_p: self.gamma_p.unwrap_or(base.gamma_p),
            ..*base
        }
    }

    fn large_cq(omega_d: f64) -> Self {
        Self {
            c_q: Some(large_cq::C_Q),
            omega_d: Some(omega_d),
            beta: None,
            gamma1: Some(large_cq::GAMMA1),
            gamma2: Some(large_cq::GAMMA2),
            gamma_p: Some(large_cq::GAMMA_P),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridSpec {
    Range { start: f64, stop: f64, points: usize },
    Values { values: Vec<f64> },
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid, HarnessError> {
        let g = match self {
            GridSpec::Range { start, stop, points } => Grid::linspace(*start, *stop, *points),
            GridSpec::Values { values } => Grid::new(values.clone()),
        };
        g.map_err(|e| HarnessError::Config(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KCurvesConfig {
    pub c_q: Vec<f64>,
    pub omega: GridSpec,
    #[serde(default)]
    pub overrides: Overrides,
}

impl Default for KCurvesConfig {
    fn default() -> Self {
        Self {
            c_q: vec![0.0, 0.02, 0.05],
            omega: GridSpec::Range { start: -0.3, stop: 0.3, points: 241 },
            overrides: Overrides::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub axis: SweepAxis,
    pub grid: GridSpec,
    #[serde(default)]
    pub coherences: bool,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSweepConfig {
    pub sweeps: Vec<SweepSpec>,
}

impl Default for ShiftSweepConfig {
    fn default() -> Self {
        let at = |c_q: Option<f64>, omega_d: Option<f64>| Overrides { c_q, omega_d, ..Overrides::default() };
        Self {
            sweeps: vec![
                SweepSpec {
                    name: "cq_sweep".into(),
                    axis: SweepAxis::CQ,
                    grid: GridSpec::Range { start: 0.0, stop: 0.1, points: 41 },
                    coherences: false,
                    overrides: Overrides::default(),
                },
                SweepSpec {
                    name: "cq_sweep_coherences".into(),
                    axis: SweepAxis::CQ,
                    grid: GridSpec::Range { start: 0.0, stop: 0.1, points: 41 },
                    coherences: true,
                    overrides: at(None, Some(0.2)),
                },
                SweepSpec {
                    name: "omega_d_sweep".into(),
                    axis: SweepAxis::OmegaD,
                    grid: GridSpec::Range { start: 0.05, stop: 2.0, points: 40 },
                    coherences: false,
                    overrides: at(Some(0.02), None),
                },
                SweepSpec {
                    name: "beta_sweep".into(),
                    axis: SweepAxis::Beta,
                    grid: GridSpec::Range {
                        // Admissible roots (k_x > 0 inside the default bracket)
                        // exist only for |beta| up to about 1.13 here.
                        start: -1.1,
                        stop: 1.1,
                        points: 45,
                    },
                    coherences: false,
                    overrides: at(Some(0.02), None),
                },
            ],
        }
    }
}

/// Initial density matrix selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `|m><m|`.
    Pure { m: f64 },
    /// Basis state by row index (index 0 is `m = K`).
    Basis { index: usize },
    /// `I / (2K + 1)`.
    MaximallyMixed,
    Matrix { re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl InitialState {
    pub fn build(&self, spin: SpinQuantumNumber) -> Result<DensityMatrix, HarnessError> {
        let r = match self {
            InitialState::Pure { m } => DensityMatrix::pure_m(spin, *m),
            InitialState::Basis { index } => DensityMatrix::basis_state(spin, *index),
            InitialState::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(spin)),
            InitialState::Matrix { re, im } => {
                let d = spin.dim();
                let rows_ok = re.len() == d && im.len() == d && re.iter().chain(im).all(|r| r.len() == d);
                if !rows_ok {
                    return Err(HarnessError::Config(format!("rho0 matrix must be {d}x{d}")));
                }
                DensityMatrix::new(Operator::from_fn(d, d, |i, j| Complex64::new(re[i][j], im[i][j])))
            }
        };
        r.map_err(|e| HarnessError::Config(format!("rho0: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub window: String,
    pub threshold: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { window: "hann".into(), threshold: DEFAULT_PEAK_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    pub rho0: InitialState,
    pub t_end: f64,
    pub output_dt: f64,
    /// Trailing fraction of the run that is transformed.
    pub window_fraction: f64,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default)]
    pub spectral: SpectralConfig,
    #[serde(default)]
    pub feedback: FeedbackConfig,
    pub runs: Vec<RunSpec>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let top = InitialState::Pure { m: 1.5 };
        let run = |name: &str, rho0: InitialState, t_end: f64, overrides: Overrides| RunSpec {
            name: name.into(),
            rho0,
            t_end,
            output_dt: 0.05,
            window_fraction: 0.5,
            overrides,
        };
        Self {
            spectral: SpectralConfig::default(),
            feedback: FeedbackConfig::default(),
            runs: vec![
                run(
                    "small_cq_top",
                    top.clone(),
                    400.0,
                    Overrides { c_q: Some(0.02), ..Overrides::default() },
                ),
                run("large_cq_top", top, large_cq::T_END, Overrides::large_cq(0.1)),
                run("large_cq_mixed", InitialState::MaximallyMixed, large_cq::T_END, Overrides::large_cq(0.1)),
                run(
                    "large_cq_mixed_strong_drive",
                    InitialState::MaximallyMixed,
                    large_cq::T_END,
                    Overrides::large_cq(1.5),
                ),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertiesConfig {
    pub count: usize,
    /// Test fixture: flip the sign of `K_y` before building the operators.
    #[serde(default)]
    pub inject_ky_sign_bug: bool,
}

impl Default for PropertiesConfig {
    fn default() -> Self {
        Self { count: 100, inject_ky_sign_bug: false }
    }
}

fn safe_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn unique_names<'a>(kind: &str, names: impl Iterator<Item = &'a str>) -> Result<(), HarnessError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !safe_name(n) {
            return Err(HarnessError::Config(format!("{kind} name {n:?} must be [A-Za-z0-9_-]+")));
        }
        if !seen.insert(n) {
            return Err(HarnessError::Config(format!("duplicate {kind} name {n:?}")));
        }
    }
    Ok(())
}

fn check_model(what: &str, p: &ModelParams) -> Result<(), HarnessError> {
    p.validate().map_err(|e| HarnessError::Config(format!("{what}: {e}")))
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let cfg: Config = toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let s = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        check_model("model", &self.model)?;

        let k = &self.kcurves;
        if k.c_q.is_empty() {
            return Err(HarnessError::Config("kcurves.c_q must not be empty".into()));
        }
        k.omega.build()?;
        for &c_q in &k.c_q {
            check_model("kcurves", &k.overrides.apply(&self.model).with_c_q(c_q))?;
        }

        unique_names("sweep", self.shift_sweep.sweeps.iter().map(|s| s.name.as_str()))?;
        for s in &self.shift_sweep.sweeps {
            let grid = s.grid.build()?;
            let base = s.overrides.apply(&self.model);
            for &v in grid.values() {
                check_model(&format!("sweep {}", s.name), &s.axis.apply(&base, v))?;
            }
        }

        let d = &self.dynamics;
        WindowRegistry::default()
            .get(&d.spectral.window)
            .map_err(|e| HarnessError::Config(format!("dynamics.spectral: {e}")))?;
        if !(d.spectral.threshold > 0.0 && d.spectral.threshold < 1.0) {
            return Err(HarnessError::Config("dynamics.spectral.threshold must be in (0, 1)".into()));
        }
        d.feedback.validate().map_err(|e| HarnessError::Config(format!("dynamics.feedback: {e}")))?;
        unique_names("run", d.runs.iter().map(|r| r.name.as_str()))?;
        for r in &d.runs {
            let p = r.overrides.apply(&self.model);
            check_model(&format!("run {}", r.name), &p)?;
            r.rho0.build(p.spin)?;
            qgyro_core::dynamics::output_times(r.t_end, r.output_dt)
                .map_err(|e| HarnessError::Config(format!("run {}: {e}", r.name)))?;
            if !(r.window_fraction > 0.0 && r.window_fraction <= 1.0) {
                return Err(HarnessError::Config(format!("run {}: window_fraction must be in (0, 1]", r.name)));
            }
        }
        Ok(())
    }
}
