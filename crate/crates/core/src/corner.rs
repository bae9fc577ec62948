//! Shuttling an ion around a right-angle corner.
//!
//! The ion starts at `(0, r)` in a trap that is weak along `x` (`ω_t`) and
//! stiff along `y` (`ω_r`), and ends at `(r, 0)` with the two axes swapped.
//! The path is a quarter arc, the shape blends between the two static
//! widths with a `τ³(1−τ)³` bump on the all-ones matrix in between.
//!
//! Internally everything is dimensionless; [`SiContext`] converts forces to
//! electric fields.

use serde::{Deserialize, Serialize};

use crate::error::{AtTime, Error, Result};
use crate::gaussian::{QuadraticHamiltonian, TimeGrid};
use crate::invariant::{design_protocol, Protocol};
use crate::linalg::{self, Matrix, Vector};
use crate::schedule::{PathSchedule, ShapeSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct CornerScenario {
    pub omega_r: f64,
    pub omega_t: f64,
    pub radius: f64,
    pub duration: f64,
    pub mass: f64,
    /// Bump matrix added mid-protocol; `(ω_tω_r)^(-1/4)` times the all-ones
    /// matrix when absent.
    pub bump: Option<Matrix>,
}

impl CornerScenario {
    /// Scenario in internal units (`ω_t = r = m = 1`).
    pub fn new(ratio: f64, duration: f64) -> Result<Self> {
        let c = Self { omega_r: ratio, omega_t: 1.0, radius: 1.0, duration, mass: 1.0, bump: None };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.omega_t) || !positive(self.omega_r) || self.omega_r < self.omega_t {
            return Err(Error::InvalidScenario(format!(
                "need omega_r >= omega_t > 0, got omega_r={} omega_t={}",
                self.omega_r, self.omega_t
            )));
        }
        for (name, v) in [("duration", self.duration), ("radius", self.radius), ("mass", self.mass)] {
            if !positive(v) {
                return Err(Error::InvalidScenario(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(b) = &self.bump {
            linalg::ensure_square(b, 2)?;
            linalg::ensure_symmetric(b, "bump matrix", 1e-12)?;
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.omega_r / self.omega_t
    }

    pub fn default_bump(&self) -> Matrix {
        Matrix::from_element(2, 2, (self.omega_t * self.omega_r).powf(-0.25))
    }

    pub fn initial_curvature(&self) -> Matrix {
        diag2(self.omega_t.powi(2), self.omega_r.powi(2))
    }

    pub fn final_curvature(&self) -> Matrix {
        diag2(self.omega_r.powi(2), self.omega_t.powi(2))
    }

    pub fn initial_position(&self) -> Vector {
        Vector::from_row_slice(&[0.0, self.radius])
    }

    pub fn final_position(&self) -> Vector {
        Vector::from_row_slice(&[self.radius, 0.0])
    }

    /// Uniform grid over `[0, T]`.
    pub fn grid(&self, steps: usize) -> Result<TimeGrid> {
        TimeGrid::over(self.duration, steps)
    }
}

fn diag2(a: f64, b: f64) -> Matrix {
    Matrix::from_diagonal(&Vector::from_row_slice(&[a, b]))
}

/// The schedules and the two endpoint Hamiltonians of a corner scenario.
#[derive(Debug, Clone)]
pub struct CornerSetup {
    pub shape: ShapeSchedule,
    pub path: PathSchedule,
    pub initial: QuadraticHamiltonian,
    pub target: QuadraticHamiltonian,
}

pub fn build_scenario(c: &CornerScenario) -> Result<CornerSetup> {
    c.validate()?;
    let (wt, wr) = (c.omega_t, c.omega_r);
    let r_i = diag2(wt.powf(-0.5), wr.powf(-0.5));
    let r_f = diag2(wr.powf(-0.5), wt.powf(-0.5));
    let bump = c.bump.clone().unwrap_or_else(|| c.default_bump());
    let shape = ShapeSchedule::blend(r_i, r_f, bump, c.duration)?;
    let path = PathSchedule::arc(c.radius, c.duration)?;
    let initial = QuadraticHamiltonian::centered(c.mass, c.initial_curvature(), &c.initial_position())?;
    let target = QuadraticHamiltonian::centered(c.mass, c.final_curvature(), &c.final_position())?;
    Ok(CornerSetup { shape, path, initial, target })
}

/// Build and sample the corner protocol on `steps` intervals.
pub fn corner_protocol(c: &CornerScenario, steps: usize) -> Result<(CornerSetup, Protocol)> {
    let setup = build_scenario(c)?;
    let protocol = design_protocol(&setup.shape, &setup.path, c.mass, c.grid(steps)?)?;
    Ok((setup, protocol))
}

/// Trap center `C = (mM)⁻¹F`.
pub fn trap_center(curvature: &Matrix, force: &Vector, mass: f64) -> Result<Vector> {
    let (values, _) = linalg::sym_eigen(curvature);
    let largest = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let smallest = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(smallest > 1e-12 * largest) {
        return Err(Error::TrapCenterUndefined { at: AtTime::default() });
    }
    let inv = curvature.clone().try_inverse().ok_or(Error::TrapCenterUndefined { at: AtTime::default() })?;
    Ok(inv * force / mass)
}

/// Trap centers along a protocol; `None` where the curvature is singular.
pub fn trap_centers(protocol: &Protocol) -> Vec<Option<Vector>> {
    protocol.points.iter().map(|p| trap_center(&p.curvature, &p.force, protocol.mass).ok()).collect()
}

/// Largest ‖C − L‖ along the protocol. Singular points count as infinite.
pub fn max_center_deviation(protocol: &Protocol) -> f64 {
    protocol
        .points
        .iter()
        .zip(trap_centers(protocol))
        .map(|(p, c)| c.map_or(f64::INFINITY, |c| (c - &p.path.l).norm()))
        .fold(0.0, f64::max)
}

/// Physical constants for converting dimensionless forces to fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SiContext {
    /// kg
    pub mass: f64,
    /// m
    pub radius: f64,
    /// rad/s
    pub omega_t: f64,
    /// C
    pub charge: f64,
}

impl Default for SiContext {
    /// A ¹⁷¹Yb⁺ ion on a 30 µm turn with a 1 MHz weak axis.
    fn default() -> Self {
        Self {
            mass: 2.8384e-25,
            radius: 30e-6,
            omega_t: 2.0 * std::f64::consts::PI * 1e6,
            charge: 1.602177e-19,
        }
    }
}

impl SiContext {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass", self.mass), ("radius", self.radius), ("omega_t", self.omega_t), ("charge", self.charge)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidScenario(format!("SI {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Volts per metre per unit of dimensionless force `F/(m ω_t² r)`.
    pub fn field_unit(&self) -> f64 {
        self.mass * self.radius * self.omega_t * self.omega_t / self.charge
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldMaximum {
    /// V/m
    pub field: f64,
    pub time: f64,
    pub index: usize,
}

/// Largest electric field `‖F/e‖` along a corner protocol, in V/m.
pub fn max_field(protocol: &Protocol, c: &CornerScenario, si: &SiContext) -> Result<FieldMaximum> {
    si.validate()?;
    let scale = si.field_unit() / (c.mass * c.omega_t * c.omega_t * c.radius);
    let (index, point) = protocol
        .points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.force.norm().total_cmp(&b.1.force.norm()))
        .ok_or_else(|| Error::InvalidGrid("empty protocol".into()))?;
    Ok(FieldMaximum { field: point.force.norm() * scale, time: point.t, index })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipse {
    pub center: [f64; 2],
    /// Major then minor semi-axis.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the x axis, radians in (−π/2, π/2].
    pub angle: f64,
}

/// Ellipse `½ (x−C)ᵀ M (x−C) = level` of a two-dimensional trap.
pub fn equipotential_ellipses(curvature: &Matrix, center: &Vector, level: f64) -> Result<Ellipse> {
    linalg::ensure_square(curvature, 2)?;
    if center.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: center.len() });
    }
    if !(level > 0.0) {
        return Err(Error::InvalidScenario(format!("ellipse level must be positive, got {level}")));
    }
    let (values, vectors) = linalg::sym_eigen(curvature);
    if !(values[0] > 0.0) {
        return Err(Error::NotPositiveDefinite { what: "M", at: AtTime::default() });
    }
    let major = vectors.column(0);
    let mut angle = major[1].atan2(major[0]);
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    } else if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    Ok(Ellipse {
        center: [center[0], center[1]],
        semi_axes: [(2.0 * level / values[0]).sqrt(), (2.0 * level / values[1]).sqrt()],
        angle,
    })
}

/// One ground-state energy quantum of the weak axis, per unit mass.
pub fn default_ellipse_level(curvature: &Matrix, mass: f64) -> f64 {
    let (values, _) = linalg::sym_eigen(curvature);
    values[0].max(0.0).sqrt() / (2.0 * mass)
}
