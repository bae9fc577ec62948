//! Run configuration.
//!
//! A single JSON document. Every field has a default, so `{}` is a valid
//! config (the ω_r/ω_t = 10, ω_tT = 3 corner). Unknown keys are rejected and
//! the error names the offending path.

use std::path::{Path, PathBuf};

use gaussinv::corner::{build_scenario, CornerScenario, SiContext};
use gaussinv::linalg::{Matrix, Vector};
use gaussinv::oracle::OracleConfig;
use gaussinv::{PathSchedule, Polynomial, QuadraticHamiltonian, ShapeSchedule};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub grid: GridConfig,
    pub si: SiContext,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
    pub figure: FigureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScenarioConfig {
    Corner(CornerConfig),
    Custom(CustomConfig),
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::Corner(CornerConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CornerConfig {
    /// ω_r/ω_t
    pub ratio: f64,
    /// ω_t T
    pub duration: f64,
    pub omega_t: f64,
    pub radius: f64,
    pub mass: f64,
    /// Rows of the 2×2 bump matrix; `(ω_tω_r)^(-1/4)` times all-ones when absent.
    pub bump: Option<Vec<Vec<f64>>>,
}

impl Default for CornerConfig {
    fn default() -> Self {
        Self { ratio: 10.0, duration: 3.0, omega_t: 1.0, radius: 1.0, mass: 1.0, bump: None }
    }
}

/// A trap `V = ½ m (x−c)ᵀM(x−c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub curvature: Vec<Vec<f64>>,
    pub center: Vec<f64>,
}

/// Polynomial schedules in reduced time τ = t/T, coefficients lowest order first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CustomConfig {
    pub duration: f64,
    pub mass: f64,
    /// `shape[i][j]` holds the coefficients of `R_ij(τ)`.
    pub shape: Vec<Vec<Vec<f64>>>,
    /// `path[i]` holds the coefficients of `L_i(τ)`.
    pub path: Vec<Vec<f64>>,
    pub initial: TrapConfig,
    pub target: TrapConfig,
}

impl Default for CustomConfig {
    fn default() -> Self {
        let trap = TrapConfig { curvature: vec![vec![1.0]], center: vec![0.0] };
        Self {
            duration: 1.0,
            mass: 1.0,
            shape: vec![vec![vec![1.0]]],
            path: vec![vec![0.0]],
            initial: trap.clone(),
            target: trap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub steps: usize,
    /// Also run the grid oracle in `all`.
    pub oracle: bool,
    pub oracle_points: usize,
    pub oracle_steps: usize,
    pub oracle_samples: usize,
    /// Arc radius of the scaled oracle run, in weak-axis ground-state widths.
    pub oracle_radius_widths: f64,
    /// Write `|ψ(T)|²` to `psi_final.bin`.
    pub snapshot: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        let o = OracleConfig::default();
        Self {
            steps: 4096,
            oracle: false,
            oracle_points: o.points,
            oracle_steps: o.steps,
            oracle_samples: o.samples,
            oracle_radius_widths: o.radius_widths,
            snapshot: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json, Format::Svg] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub ratios: Vec<f64>,
    pub durations: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { ratios: vec![10.0, 2.0], durations: vec![3.0, 5.0, 10.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigureConfig {
    /// Number of ellipses, spread evenly over `[0, T]`.
    pub ellipses: usize,
    /// Potential level per unit mass; one weak-axis quantum when absent.
    pub level: Option<f64>,
    pub width: f64,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self { ellipses: 9, level: None, width: 480.0 }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix, CliError> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Config(format!("{what} must be a non-empty square matrix")));
    }
    Ok(Matrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// Everything a command needs to run one scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub shape: ShapeSchedule,
    pub path: PathSchedule,
    pub initial: QuadraticHamiltonian,
    pub target: QuadraticHamiltonian,
    pub mass: f64,
    pub duration: f64,
    pub corner: Option<CornerScenario>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Length used to express center deviations.
    pub fn length_scale(&self) -> f64 {
        self.corner.as_ref().map_or(1.0, |c| c.radius)
    }
}

impl CornerConfig {
    pub fn scenario(&self) -> Result<CornerScenario, CliError> {
        let bump = self.bump.as_deref().map(|b| matrix(b, "scenario.bump")).transpose()?;
        let c = CornerScenario {
            omega_r: self.ratio * self.omega_t,
            omega_t: self.omega_t,
            radius: self.radius,
            duration: self.duration / self.omega_t,
            mass: self.mass,
            bump,
        };
        c.validate()?;
        Ok(c)
    }
}

impl ScenarioConfig {
    pub fn build(&self) -> Result<Scenario, CliError> {
        match self {
            ScenarioConfig::Corner(cfg) => {
                let c = cfg.scenario()?;
                let s = build_scenario(&c)?;
                Ok(Scenario {
                    shape: s.shape,
                    path: s.path,
                    initial: s.initial,
                    target: s.target,
                    mass: c.mass,
                    duration: c.duration,
                    corner: Some(c),
                })
            }
            ScenarioConfig::Custom(cfg) => {
                let entries = cfg
                    .shape
                    .iter()
                    .map(|row| row.iter().map(|c| Polynomial::new(c.clone())).collect())
                    .collect();
                let shape = ShapeSchedule::from_entries(entries, cfg.duration)?;
                let path =
                    PathSchedule::from_components(cfg.path.iter().map(|c| Polynomial::new(c.clone())).collect(), cfg.duration)?;
                let trap = |t: &TrapConfig, what: &str| -> Result<QuadraticHamiltonian, CliError> {
                    let m = matrix(&t.curvature, what)?;
                    Ok(QuadraticHamiltonian::centered(cfg.mass, m, &Vector::from_row_slice(&t.center))?)
                };
                Ok(Scenario {
                    shape,
                    path,
                    initial: trap(&cfg.initial, "scenario.initial.curvature")?,
                    target: trap(&cfg.target, "scenario.target.curvature")?,
                    mass: cfg.mass,
                    duration: cfg.duration,
                    corner: None,
                })
            }
        }
    }
}

impl GridConfig {
    pub fn oracle(&self, scenario: &ScenarioConfig) -> Result<OracleConfig, CliError> {
        let ScenarioConfig::Corner(c) = scenario else {
            return Err(CliError::Config("the grid oracle runs the corner scenario only".into()));
        };
        Ok(OracleConfig {
            ratio: c.ratio,
            duration: c.duration,
            radius_widths: self.oracle_radius_widths,
            points: self.oracle_points,
            steps: self.oracle_steps,
            samples: self.oracle_samples,
        })
    }
}
