use serde::Serialize;

use super::{build_invariant, compute_f, compute_j, compute_m, QuadraticInvariant};
use crate::error::{Error, Result};
use crate::gaussian::{HamiltonianSchedule, QuadraticHamiltonian, TimeGrid};
use crate::linalg::{Matrix, Vector};
use crate::schedule::{PathSample, PathSchedule, ShapeSample, ShapeSchedule, BOUNDARY_TOLERANCE};

/// A shape schedule, a path schedule and a mass: everything needed to
/// evaluate the engineered Hamiltonian at any time in `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    shape: ShapeSchedule,
    path: PathSchedule,
    mass: f64,
}

impl Design {
    pub fn new(shape: ShapeSchedule, path: PathSchedule, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidSchedule(format!("mass must be positive, got {mass}")));
        }
        if shape.dim() != path.dim() {
            return Err(Error::DimensionMismatch { expected: shape.dim(), found: path.dim() });
        }
        if (shape.duration() - path.duration()).abs() > 1e-12 * shape.duration() {
            return Err(Error::InvalidSchedule(format!(
                "shape lasts {} but path lasts {}",
                shape.duration(),
                path.duration()
            )));
        }
        Ok(Self { shape, path, mass })
    }

    pub fn shape(&self) -> &ShapeSchedule {
        &self.shape
    }

    pub fn path(&self) -> &PathSchedule {
        &self.path
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn duration(&self) -> f64 {
        self.shape.duration()
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Fails unless `Ṙ(0)` vanishes, which the curvature formulas rely on.
    pub fn check_initial_rest(&self) -> Result<()> {
        let s = self.shape.eval(0.0)?;
        let residual = s.r_dot.norm() / s.r.norm().max(1.0);
        if residual > BOUNDARY_TOLERANCE {
            return Err(Error::InvalidSchedule(format!("dR/dt(0) must vanish (residual {residual:.3e})")));
        }
        Ok(())
    }

    /// Curvature and force only.
    pub fn curvature_and_force(&self, t: f64) -> Result<(Matrix, Vector)> {
        let run = || {
            let s = self.shape.eval(t)?;
            let p = self.path.eval(t)?;
            let m = compute_m(&s.r, &s.r_dot, &s.r_ddot)?;
            let f = compute_f(&p.l_ddot, &m, &p.l, self.mass)?;
            Ok((m, f))
        };
        run().map_err(|e: Error| e.at_time(t))
    }

    /// Full evaluation at one instant.
    pub fn point(&self, t: f64) -> Result<ProtocolPoint> {
        let run = || {
            let shape = self.shape.eval(t)?;
            let path = self.path.eval(t)?;
            let j = compute_j(&shape.r, &shape.r_dot)?;
            let curvature = compute_m(&shape.r, &shape.r_dot, &shape.r_ddot)?;
            let force = compute_f(&path.l_ddot, &curvature, &path.l, self.mass)?;
            let invariant = build_invariant(&shape.r, &shape.r_dot, &path.l, &path.l_dot, self.mass)?;
            Ok(ProtocolPoint { t, shape, path, j, curvature, force, invariant })
        };
        run().map_err(|e: Error| e.at_time(t))
    }
}

impl HamiltonianSchedule for Design {
    fn hamiltonian(&self, t: f64) -> Result<QuadraticHamiltonian> {
        let (m, f) = self.curvature_and_force(t)?;
        QuadraticHamiltonian::new(self.mass, m, f).map_err(|e| e.at_time(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolPoint {
    pub t: f64,
    pub shape: ShapeSample,
    pub path: PathSample,
    pub j: Matrix,
    pub curvature: Matrix,
    pub force: Vector,
    pub invariant: QuadraticInvariant,
}

impl ProtocolPoint {
    pub fn hamiltonian(&self, mass: f64) -> Result<QuadraticHamiltonian> {
        QuadraticHamiltonian::new(mass, self.curvature.clone(), self.force.clone())
    }
}

/// Protocol sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub mass: f64,
    pub grid: TimeGrid,
    pub points: Vec<ProtocolPoint>,
}

impl Protocol {
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.force.len())
    }

    /// Largest ‖Γ𝒮Γ − 𝒮‖ along the protocol.
    pub fn max_symplectic_residual(&self) -> f64 {
        self.points.iter().map(|p| p.invariant.symplectic_residual()).fold(0.0, f64::max)
    }

    pub fn series(&self) -> impl Iterator<Item = SeriesRow<'_>> {
        self.points.iter().map(|p| SeriesRow {
            t: p.t,
            curvature: &p.curvature,
            force: &p.force,
            gamma: &p.invariant.gamma,
            w: &p.invariant.w,
            theta: p.invariant.theta,
        })
    }
}

/// Borrowed `(t, M, F, Γ, W, θ)` row.
#[derive(Debug, Serialize)]
pub struct SeriesRow<'a> {
    pub t: f64,
    pub curvature: &'a Matrix,
    pub force: &'a Vector,
    pub gamma: &'a Matrix,
    pub w: &'a Vector,
    pub theta: f64,
}

/// Evaluate the design on every point of `grid`.
pub fn design_protocol(shape: &ShapeSchedule, path: &PathSchedule, mass: f64, grid: TimeGrid) -> Result<Protocol> {
    let design = Design::new(shape.clone(), path.clone(), mass)?;
    design.check_initial_rest()?;
    let points = grid.times().map(|t| design.point(t)).collect::<Result<Vec<_>>>()?;
    Ok(Protocol { mass, grid, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Polynomial;

    fn static_design() -> (ShapeSchedule, PathSchedule) {
        let r = Matrix::from_row_slice(2, 2, &[1.2, 0.1, 0.1, 0.8]);
        let shape = ShapeSchedule::blend(r.clone(), r, Matrix::zeros(2, 2), 2.0).unwrap();
        let path = PathSchedule::from_components(vec![Polynomial::constant(0.4), Polynomial::constant(-0.3)], 2.0)
            .unwrap();
        (shape, path)
    }

    #[test]
    fn static_design_is_static() {
        let (shape, path) = static_design();
        let p = design_protocol(&shape, &path, 1.5, TimeGrid::over(2.0, 8).unwrap()).unwrap();
        let r = shape.eval(0.0).unwrap().r;
        let m0 = crate::linalg::spd_power(&r, -4.0, "R").unwrap();
        let l = Vector::from_row_slice(&[0.4, -0.3]);
        for pt in &p.points {
            assert!((&pt.curvature - &m0).norm() < 1e-12);
            assert!((&pt.force - &m0 * &l * 1.5).norm() < 1e-12);
        }
        assert_eq!(p.points.len(), 9);
        assert!(p.max_symplectic_residual() < 1e-12);
    }

    #[test]
    fn moving_start_is_rejected() {
        let shape = ShapeSchedule::from_entries(
            vec![vec![Polynomial::new(vec![1.0, 0.5])]],
            1.0,
        )
        .unwrap();
        let path = PathSchedule::from_components(vec![Polynomial::constant(0.0)], 1.0).unwrap();
        let err = design_protocol(&shape, &path, 1.0, TimeGrid::over(1.0, 4).unwrap()).unwrap_err();
        assert!(err.to_string().contains("dR/dt(0)"), "{err}");
    }

    #[test]
    fn mismatched_schedules_are_rejected() {
        let (shape, _) = static_design();
        let path = PathSchedule::from_components(vec![Polynomial::constant(0.0)], 2.0).unwrap();
        assert!(matches!(Design::new(shape.clone(), path, 1.0), Err(Error::DimensionMismatch { .. })));
        let (_, path) = static_design();
        assert!(Design::new(shape, path, 0.0).is_err());
    }

    #[test]
    fn linear_ramp_in_one_dimension() {
        // R constant, L a smooth rest-to-rest ramp: F = m L̈ + m M L with M = R⁻⁴
        let t_end = 3.0;
        let shape = ShapeSchedule::from_entries(vec![vec![Polynomial::constant(0.9)]], t_end).unwrap();
        let ramp = Polynomial::new(vec![0.0, 0.0, 0.0, 20.0, -30.0, 12.0]);
        let path = PathSchedule::from_components(vec![ramp.clone()], t_end).unwrap();
        let mass = 2.0;
        let p = design_protocol(&shape, &path, mass, TimeGrid::over(t_end, 30).unwrap()).unwrap();
        let m = 0.9_f64.powi(-4);
        for pt in &p.points {
            let jet = ramp.eval(pt.t / t_end);
            let want = mass * (jet.second / (t_end * t_end) + m * jet.value);
            assert!((pt.force[0] - want).abs() < 1e-12 * want.abs().max(1.0));
            assert!((pt.curvature[(0, 0)] - m).abs() < 1e-12);
        }
    }
}
