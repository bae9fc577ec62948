//! Time-parametrised shape `R(t)` and path `L(t)` schedules.
//!
//! Every schedule is polynomial in the reduced time `τ = t/T`, so first and
//! second derivatives are exact and the endpoint conditions hold to machine
//! precision.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{AtTime, Error, Result};
use crate::gaussian::QuadraticHamiltonian;
use crate::linalg::{self, Matrix, Vector};

/// Tolerance used for every endpoint condition in [`validate_boundaries`].
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Tolerance used when a blend or path polynomial is checked at construction.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-12;

/// Number of points on which positivity of `R(t)` is checked by default.
pub const DEFAULT_VALIDATION_POINTS: usize = 1024;

/// A value together with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Polynomial in the monomial basis, `c₀ + c₁x + c₂x² + …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// The envelope τ³(1−τ)³, which vanishes with its first two derivatives at 0 and 1.
    pub fn smooth_bump() -> Self {
        Self::new(vec![0.0, 0.0, 0.0, 1.0, -3.0, 3.0, -1.0])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation of the value and the first two derivatives.
    pub fn eval(&self, x: f64) -> Jet {
        let mut jet = Jet::default();
        for &c in self.coeffs.iter().rev() {
            jet.second = jet.second * x + 2.0 * jet.first;
            jet.first = jet.first * x + jet.value;
            jet.value = jet.value * x + c;
        }
        jet
    }
}

/// A polynomial blend p(τ) with p(0)=0, p(1)=1 and vanishing first and second
/// derivatives at both ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlendPolynomial(Polynomial);

impl BlendPolynomial {
    /// p(τ) = 10τ³ − 15τ⁴ + 6τ⁵.
    pub fn quintic() -> Self {
        Self(Polynomial::new(vec![0.0, 0.0, 0.0, 10.0, -15.0, 6.0]))
    }

    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let poly = Polynomial::new(coeffs);
        let start = poly.eval(0.0);
        let end = poly.eval(1.0);
        let checks = [
            ("p(0)", start.value, 0.0),
            ("p(1)", end.value, 1.0),
            ("p'(0)", start.first, 0.0),
            ("p'(1)", end.first, 0.0),
            ("p''(0)", start.second, 0.0),
            ("p''(1)", end.second, 0.0),
        ];
        for (name, got, want) in checks {
            if (got - want).abs() > CONSTRUCTION_TOLERANCE {
                return Err(Error::InvalidBlend(format!("{name} = {got}, expected {want}")));
            }
        }
        Ok(Self(poly))
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.0
    }

    pub fn eval(&self, tau: f64) -> Result<Jet> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::OutOfDomain { what: "tau", value: tau, lo: 0.0, hi: 1.0 });
        }
        Ok(self.0.eval(tau))
    }
}

impl Default for BlendPolynomial {
    fn default() -> Self {
        Self::quintic()
    }
}

/// Free-function form of [`BlendPolynomial::eval`].
pub fn eval_blend(p: &BlendPolynomial, tau: f64) -> Result<Jet> {
    p.eval(tau)
}

fn reduced_time(t: f64, duration: f64) -> Result<f64> {
    let slack = 1e-12 * duration;
    if !(t >= -slack && t <= duration + slack) {
        return Err(Error::OutOfDomain { what: "t", value: t, lo: 0.0, hi: duration });
    }
    Ok((t / duration).clamp(0.0, 1.0))
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidSchedule(format!("duration must be positive, got {duration}")));
    }
    Ok(())
}

/// `R`, `Ṙ`, `R̈` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSample {
    pub r: Matrix,
    pub r_dot: Matrix,
    pub r_ddot: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    /// `R = (1 − p)R_i + p R_f + e(τ) R_c` with blend `p` and envelope `e`.
    Blend {
        initial: Matrix,
        target: Matrix,
        bump: Matrix,
        blend: BlendPolynomial,
        envelope: Polynomial,
    },
    /// Symmetric matrix of per-entry polynomials in τ.
    Entries(Vec<Vec<Polynomial>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSchedule {
    duration: f64,
    dim: usize,
    kind: ShapeKind,
}

impl ShapeSchedule {
    /// Blend between `initial` and `target` with the quintic blend and the
    /// τ³(1−τ)³ envelope on `bump`.
    pub fn blend(initial: Matrix, target: Matrix, bump: Matrix, duration: f64) -> Result<Self> {
        Self::with_blend(initial, target, bump, BlendPolynomial::quintic(), Polynomial::smooth_bump(), duration)
    }

    pub fn with_blend(
        initial: Matrix,
        target: Matrix,
        bump: Matrix,
        blend: BlendPolynomial,
        envelope: Polynomial,
        duration: f64,
    ) -> Result<Self> {
        check_duration(duration)?;
        let dim = initial.nrows();
        for m in [&initial, &target, &bump] {
            linalg::ensure_square(m, dim)?;
        }
        linalg::ensure_symmetric(&initial, "R_i", 1e-12)?;
        linalg::ensure_symmetric(&target, "R_f", 1e-12)?;
        linalg::ensure_symmetric(&bump, "R_c", 1e-12)?;
        if !linalg::is_positive_definite(&initial) {
            return Err(Error::NotPositiveDefinite { what: "R_i", at: AtTime::default() });
        }
        if !linalg::is_positive_definite(&target) {
            return Err(Error::NotPositiveDefinite { what: "R_f", at: AtTime::default() });
        }
        let kind = ShapeKind::Blend {
            initial: linalg::symmetrize(&initial),
            target: linalg::symmetrize(&target),
            bump: linalg::symmetrize(&bump),
            blend,
            envelope,
        };
        Ok(Self { duration, dim, kind })
    }

    pub fn from_entries(entries: Vec<Vec<Polynomial>>, duration: f64) -> Result<Self> {
        check_duration(duration)?;
        let dim = entries.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            for j in 0..i {
                if row[j] != entries[j][i] {
                    return Err(Error::InvalidSchedule(format!("entry ({i},{j}) differs from ({j},{i})")));
                }
            }
        }
        Ok(Self { duration, dim, kind: ShapeKind::Entries(entries) })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    /// Evaluate without the positivity check.
    pub fn eval_unchecked(&self, t: f64) -> Result<ShapeSample> {
        let tau = reduced_time(t, self.duration)?;
        let inv_t = 1.0 / self.duration;
        let d = self.dim;
        let sample = match &self.kind {
            ShapeKind::Blend { initial, target, bump, blend, envelope } => {
                let p = blend.eval(tau)?;
                let e = envelope.eval(tau);
                let delta = target - initial;
                ShapeSample {
                    r: initial * (1.0 - p.value) + target * p.value + bump * e.value,
                    r_dot: (&delta * p.first + bump * e.first) * inv_t,
                    r_ddot: (&delta * p.second + bump * e.second) * (inv_t * inv_t),
                }
            }
            ShapeKind::Entries(entries) => {
                let mut s = ShapeSample { r: Matrix::zeros(d, d), r_dot: Matrix::zeros(d, d), r_ddot: Matrix::zeros(d, d) };
                for i in 0..d {
                    for j in 0..d {
                        let jet = entries[i][j].eval(tau);
                        s.r[(i, j)] = jet.value;
                        s.r_dot[(i, j)] = jet.first * inv_t;
                        s.r_ddot[(i, j)] = jet.second * inv_t * inv_t;
                    }
                }
                s
            }
        };
        Ok(sample)
    }

    /// `(R, Ṙ, R̈)` at time `t`; fails if `R(t)` is not positive definite.
    pub fn eval(&self, t: f64) -> Result<ShapeSample> {
        let s = self.eval_unchecked(t)?;
        if !linalg::is_positive_definite(&s.r) {
            return Err(Error::NotPositiveDefinite { what: "R", at: AtTime(Some(t)) });
        }
        Ok(s)
    }

    /// Check positivity of `R(t)` on `points` equally spaced instants.
    pub fn validate_positivity(&self, points: usize) -> Result<()> {
        let n = points.max(2) - 1;
        for i in 0..=n {
            let t = if i == n { self.duration } else { self.duration * (i as f64 / n as f64) };
            self.eval(t)?;
        }
        Ok(())
    }
}

/// Free-function form of [`ShapeSchedule::eval`].
pub fn eval_r(s: &ShapeSchedule, t: f64) -> Result<ShapeSample> {
    s.eval(t)
}

/// `L`, `L̇`, `L̈` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub l: Vector,
    pub l_dot: Vector,
    pub l_ddot: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    /// Quarter arc from `(0, r)` to `(r, 0)`: `L = r [sin(πp/2), cos(πp/2)]`.
    Arc { radius: f64, blend: BlendPolynomial },
    /// One polynomial in τ per component.
    Components(Vec<Polynomial>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSchedule {
    duration: f64,
    kind: PathKind,
}

impl PathSchedule {
    pub fn arc(radius: f64, duration: f64) -> Result<Self> {
        Self::arc_with_blend(radius, BlendPolynomial::quintic(), duration)
    }

    pub fn arc_with_blend(radius: f64, blend: BlendPolynomial, duration: f64) -> Result<Self> {
        check_duration(duration)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSchedule(format!("arc radius must be positive, got {radius}")));
        }
        Ok(Self { duration, kind: PathKind::Arc { radius, blend } })
    }

    /// Per-component polynomial path; endpoint velocity and acceleration must vanish.
    pub fn from_components(components: Vec<Polynomial>, duration: f64) -> Result<Self> {
        check_duration(duration)?;
        if components.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for (i, c) in components.iter().enumerate() {
            for tau in [0.0, 1.0] {
                let jet = c.eval(tau);
                if jet.first.abs() > CONSTRUCTION_TOLERANCE || jet.second.abs() > CONSTRUCTION_TOLERANCE {
                    return Err(Error::InvalidSchedule(format!(
                        "path component {i} has non-zero velocity or acceleration at tau={tau}"
                    )));
                }
            }
        }
        Ok(Self { duration, kind: PathKind::Components(components) })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PathKind::Arc { .. } => 2,
            PathKind::Components(c) => c.len(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<PathSample> {
        let tau = reduced_time(t, self.duration)?;
        let inv_t = 1.0 / self.duration;
        match &self.kind {
            PathKind::Arc { radius, blend } => {
                let p = blend.eval(tau)?;
                let angle = FRAC_PI_2 * p.value;
                let rate = FRAC_PI_2 * p.first * inv_t;
                let accel = FRAC_PI_2 * p.second * inv_t * inv_t;
                let (s, c) = angle.sin_cos();
                Ok(PathSample {
                    l: Vector::from_row_slice(&[radius * s, radius * c]),
                    l_dot: Vector::from_row_slice(&[radius * rate * c, -radius * rate * s]),
                    l_ddot: Vector::from_row_slice(&[
                        radius * (accel * c - rate * rate * s),
                        radius * (-accel * s - rate * rate * c),
                    ]),
                })
            }
            PathKind::Components(components) => {
                let n = components.len();
                let mut out = PathSample { l: Vector::zeros(n), l_dot: Vector::zeros(n), l_ddot: Vector::zeros(n) };
                for (i, c) in components.iter().enumerate() {
                    let jet = c.eval(tau);
                    out.l[i] = jet.value;
                    out.l_dot[i] = jet.first * inv_t;
                    out.l_ddot[i] = jet.second * inv_t * inv_t;
                }
                Ok(out)
            }
        }
    }
}

/// Free-function form of [`PathSchedule::eval`].
pub fn eval_l(p: &PathSchedule, t: f64) -> Result<PathSample> {
    p.eval(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCheck {
    pub condition: &'static str,
    pub t: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub checks: Vec<BoundaryCheck>,
}

impl BoundaryReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundaryCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn residual(&self, condition: &str, t: f64) -> Option<f64> {
        self.checks.iter().find(|c| c.condition == condition && c.t == t).map(|c| c.residual)
    }
}

/// Check the endpoint conditions that make the invariant commute with the
/// Hamiltonian at `t = 0` and `t = T`, plus the vanishing second derivatives
/// the invariant equations demand there.
pub fn validate_boundaries(
    shape: &ShapeSchedule,
    path: &PathSchedule,
    start: &QuadraticHamiltonian,
    end: &QuadraticHamiltonian,
) -> Result<BoundaryReport> {
    let d = shape.dim();
    for found in [path.dim(), start.dim(), end.dim()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    let mut checks = Vec::with_capacity(12);
    for (t, h) in [(0.0, start), (shape.duration(), end)] {
        let quarter = linalg::spd_power(h.curvature(), -0.25, "endpoint curvature").map_err(|e| e.at_time(t))?;
        let center = (h.curvature() * h.mass()).try_inverse().ok_or(Error::NoBoundGroundState)? * h.force();
        let r = shape.eval_unchecked(t)?;
        let l = path.eval(t)?;
        let residuals = [
            ("R = M^(-1/4)", (&r.r - quarter).norm()),
            ("dR/dt = 0", r.r_dot.norm()),
            ("d2R/dt2 = 0", r.r_ddot.norm()),
            ("L = (mM)^-1 F", (&l.l - center).norm()),
            ("dL/dt = 0", l.l_dot.norm()),
            ("d2L/dt2 = 0", l.l_ddot.norm()),
        ];
        checks.extend(residuals.into_iter().map(|(condition, residual)| BoundaryCheck {
            condition,
            t,
            residual,
            pass: residual <= BOUNDARY_TOLERANCE,
        }));
    }
    Ok(BoundaryReport { checks })
}
