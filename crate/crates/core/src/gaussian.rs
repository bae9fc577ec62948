//! Phase-space description of Gaussian states and quadratic Hamiltonians.
//!
//! Phase-space vectors are ordered `(x₁…x_d, p₁…p_d)` and all quantities are
//! in natural units (ħ = 1). A Hamiltonian
//!
//! ```text
//! H = Σ pᵢ²/(2m) + ½ m xᵀ M x − F·x
//! ```
//!
//! expands to `H = ½ Xᵀ Ω X + Vᵀ X` with `Ω = diag(mM, 𝟙/m)` and `V = [−F; 0]`.
//! Under such a Hamiltonian a Gaussian state stays Gaussian; its mean obeys
//! Hamilton's equations `Ẋ = 𝒮 (Ω X + V)` and its covariance obeys
//! `Σ̇ = 𝒮ΩΣ − ΣΩ𝒮`.

use serde::Serialize;

use crate::error::{AtTime, Error, Result};
use crate::linalg::{self, block2, stack, Matrix, Vector};

/// Relative symmetry tolerance accepted for user supplied curvature matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    mass: f64,
    curvature: Matrix,
    force: Vector,
}

impl QuadraticHamiltonian {
    pub fn new(mass: f64, curvature: Matrix, force: Vector) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidSchedule(format!("mass must be positive, got {mass}")));
        }
        let d = force.len();
        if d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        linalg::ensure_square(&curvature, d)?;
        linalg::ensure_symmetric(&curvature, "curvature", SYMMETRY_TOLERANCE)?;
        Ok(Self { mass, curvature: linalg::symmetrize(&curvature), force })
    }

    /// Harmonic trap `½ m (x − c)ᵀ M (x − c)` centred at `center`.
    pub fn centered(mass: f64, curvature: Matrix, center: &Vector) -> Result<Self> {
        let force = &curvature * center * mass;
        Self::new(mass, curvature, force)
    }

    pub fn dim(&self) -> usize {
        self.force.len()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn curvature(&self) -> &Matrix {
        &self.curvature
    }

    pub fn force(&self) -> &Vector {
        &self.force
    }

    /// Phase-space Hessian Ω and linear coefficient vector V.
    pub fn matrices(&self) -> (Matrix, Vector) {
        let d = self.dim();
        let m = self.mass;
        let omega = block2(
            &(&self.curvature * m),
            &Matrix::zeros(d, d),
            &Matrix::zeros(d, d),
            &(Matrix::identity(d, d) / m),
        );
        let v = stack(&(-&self.force), &Vector::zeros(d));
        (omega, v)
    }

    /// Gradient of the classical Hamiltonian at phase-space point `x`.
    pub fn gradient(&self, x: &Vector) -> Vector {
        let d = self.dim();
        let position = x.rows(0, d);
        let momentum = x.rows(d, d);
        let top = &self.curvature * position * self.mass - &self.force;
        let bottom = momentum / self.mass;
        stack(&top, &bottom.into_owned())
    }
}

/// Free-function form of [`QuadraticHamiltonian::matrices`].
pub fn hamiltonian_matrices(h: &QuadraticHamiltonian) -> (Matrix, Vector) {
    h.matrices()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianState {
    pub mean: Vector,
    pub covariance: Matrix,
}

impl GaussianState {
    pub fn new(mean: Vector, covariance: Matrix) -> Result<Self> {
        let n = mean.len();
        if n == 0 || n % 2 != 0 {
            return Err(Error::DimensionMismatch { expected: n + n % 2, found: n });
        }
        linalg::ensure_square(&covariance, n)?;
        linalg::ensure_symmetric(&covariance, "covariance", 1e-10)?;
        if !linalg::is_positive_definite(&covariance) {
            return Err(Error::NotPositiveDefinite { what: "covariance", at: AtTime::default() });
        }
        Ok(Self { mean, covariance: linalg::symmetrize(&covariance) })
    }

    pub fn dim(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn position_covariance(&self) -> Matrix {
        let d = self.dim();
        self.covariance.view((0, 0), (d, d)).into_owned()
    }

    /// Symplectic eigenvalues; all equal ½ for a pure state.
    pub fn symplectic_eigenvalues(&self) -> Result<Vector> {
        linalg::symplectic_eigenvalues(&self.covariance)
    }

    /// Largest deviation of a symplectic eigenvalue from ½.
    pub fn purity_defect(&self) -> Result<f64> {
        Ok(self.symplectic_eigenvalues()?.iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max))
    }
}

/// Ground state of a bound quadratic Hamiltonian.
pub fn ground_state(h: &QuadraticHamiltonian) -> Result<GaussianState> {
    let d = h.dim();
    let m = h.mass();
    let inv_sqrt = linalg::spd_power(h.curvature(), -0.5, "curvature").map_err(|_| Error::NoBoundGroundState)?;
    let sqrt = linalg::spd_power(h.curvature(), 0.5, "curvature")?;
    let center = (h.curvature() * m).try_inverse().ok_or(Error::NoBoundGroundState)? * h.force();
    let mean = stack(&center, &Vector::zeros(d));
    let covariance = block2(&(inv_sqrt / (2.0 * m)), &Matrix::zeros(d, d), &Matrix::zeros(d, d), &(sqrt * (m / 2.0)));
    Ok(GaussianState { mean, covariance })
}

/// Uniform time grid `start = t₀ < t₁ < … < t_N = end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    start: f64,
    end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least 2 grid points".into()));
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidGrid(format!("grid must be strictly increasing, got [{start}, {end}]")));
        }
        Ok(Self { start, end, steps })
    }

    pub fn over(duration: f64, steps: usize) -> Result<Self> {
        Self::new(0.0, duration, steps)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / self.steps as f64
    }

    /// The i-th grid point; the last point is exactly `end`.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.end
        } else {
            self.start + (self.end - self.start) * (i as f64 / self.steps as f64)
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |i| self.time(i))
    }
}

/// Anything that yields the Hamiltonian in force at time `t`.
pub trait HamiltonianSchedule {
    fn hamiltonian(&self, t: f64) -> Result<QuadraticHamiltonian>;
}

impl HamiltonianSchedule for QuadraticHamiltonian {
    fn hamiltonian(&self, _t: f64) -> Result<QuadraticHamiltonian> {
        Ok(self.clone())
    }
}

impl<F> HamiltonianSchedule for F
where
    F: Fn(f64) -> Result<QuadraticHamiltonian>,
{
    fn hamiltonian(&self, t: f64) -> Result<QuadraticHamiltonian> {
        self(t)
    }
}

fn derivative(h: &QuadraticHamiltonian, mean: &Vector, cov: &Matrix, s: &Matrix) -> (Vector, Matrix) {
    let (omega, _) = h.matrices();
    let dmean = s * h.gradient(mean);
    // Σ̇ = 𝒮ΩΣ − ΣΩ𝒮, and −Ω𝒮 = (𝒮Ω)ᵀ
    let so = s * &omega;
    let dcov = &so * cov + cov * so.transpose();
    (dmean, dcov)
}

/// Classic fourth-order Runge–Kutta propagation of mean and covariance.
///
/// Returns the state at every grid point, the initial state included.
pub fn propagate<H: HamiltonianSchedule + ?Sized>(
    initial: &GaussianState,
    schedule: &H,
    grid: &TimeGrid,
) -> Result<Vec<GaussianState>> {
    let d = initial.dim();
    let s = linalg::symplectic_form(d);
    let h = grid.step();
    let mut out = Vec::with_capacity(grid.len());
    let mut mean = initial.mean.clone();
    let mut cov = initial.covariance.clone();
    out.push(initial.clone());
    for i in 0..grid.steps() {
        let t = grid.time(i);
        let t_next = grid.time(i + 1);
        let stamp = |e: Error| e.at_time(t);
        let h0 = schedule.hamiltonian(t).map_err(stamp)?;
        let hm = schedule.hamiltonian(t + 0.5 * h).map_err(stamp)?;
        let h1 = schedule.hamiltonian(t_next).map_err(stamp)?;
        if h0.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: h0.dim() });
        }
        let (k1x, k1s) = derivative(&h0, &mean, &cov, &s);
        let (k2x, k2s) = derivative(&hm, &(&mean + &k1x * (0.5 * h)), &(&cov + &k1s * (0.5 * h)), &s);
        let (k3x, k3s) = derivative(&hm, &(&mean + &k2x * (0.5 * h)), &(&cov + &k2s * (0.5 * h)), &s);
        let (k4x, k4s) = derivative(&h1, &(&mean + &k3x * h), &(&cov + &k3s * h), &s);
        mean += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        cov += (k1s + k2s * 2.0 + k3s * 2.0 + k4s) * (h / 6.0);
        cov = linalg::symmetrize(&cov);
        if mean.iter().chain(cov.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index: i + 1, t: t_next });
        }
        out.push(GaussianState { mean: mean.clone(), covariance: cov.clone() });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchTolerance {
    /// Bound on the relative Frobenius covariance error.
    pub covariance: f64,
    /// Bound on the mean offset, in units of the reference's smallest position width.
    pub mean: f64,
}

impl Default for MatchTolerance {
    fn default() -> Self {
        Self { covariance: 1e-6, mean: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchReport {
    pub covariance_rel_error: f64,
    pub position_rel_error: f64,
    pub mean_offset_widths: f64,
    pub pass: bool,
}

/// Compare `a` against the reference `b`.
pub fn state_match(a: &GaussianState, b: &GaussianState, tol: MatchTolerance) -> Result<MatchReport> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch { expected: b.mean.len(), found: a.mean.len() });
    }
    let covariance_rel_error = (&a.covariance - &b.covariance).norm() / b.covariance.norm();
    let pa = a.position_covariance();
    let pb = b.position_covariance();
    let position_rel_error = (&pa - &pb).norm() / pb.norm();
    let (widths, _) = linalg::sym_eigen(&pb);
    let smallest_width = widths[0].max(0.0).sqrt();
    let mean_offset_widths = (&a.mean - &b.mean).norm() / smallest_width;
    let pass = covariance_rel_error <= tol.covariance && mean_offset_widths <= tol.mean;
    Ok(MatchReport { covariance_rel_error, position_rel_error, mean_offset_widths, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(v))
    }

    fn iso() -> QuadraticHamiltonian {
        QuadraticHamiltonian::new(1.0, Matrix::identity(2, 2), Vector::zeros(2)).unwrap()
    }

    #[test]
    fn identity_hamiltonian_matrices() {
        let (omega, v) = iso().matrices();
        assert_eq!(omega, Matrix::identity(4, 4));
        assert_eq!(v, Vector::zeros(4));
    }

    #[test]
    fn block_assembly_with_mass() {
        let h = QuadraticHamiltonian::new(2.0, diag(&[1.0, 4.0]), Vector::from_row_slice(&[1.0, 0.0])).unwrap();
        let (omega, v) = hamiltonian_matrices(&h);
        assert_eq!(omega, diag(&[2.0, 8.0, 0.5, 0.5]));
        assert_eq!(v, Vector::from_row_slice(&[-1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn off_diagonal_coupling_lands_in_position_block() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let (omega, _) = QuadraticHamiltonian::new(1.0, m, Vector::zeros(2)).unwrap().matrices();
        assert_eq!(omega[(0, 1)], 0.3);
        assert_eq!(omega[(1, 0)], 0.3);
        assert_eq!(omega.view((2, 2), (2, 2)).into_owned(), Matrix::identity(2, 2));
        assert_eq!(omega[(0, 2)], 0.0);
    }

    #[test]
    fn rejects_asymmetric_curvature() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 1.0]);
        assert!(matches!(QuadraticHamiltonian::new(1.0, m, Vector::zeros(2)), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn isotropic_ground_state() {
        let g = ground_state(&iso()).unwrap();
        assert_eq!(g.mean, Vector::zeros(4));
        assert!((g.covariance - Matrix::identity(4, 4) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn stiff_ground_state_matches_oscillator_widths() {
        // σ_x² = 1/(2mω), σ_p² = mω/2 with ω = 2
        let h = QuadraticHamiltonian::new(1.0, diag(&[4.0, 4.0]), Vector::zeros(2)).unwrap();
        let g = ground_state(&h).unwrap();
        assert!((g.covariance.view((0, 0), (2, 2)) - Matrix::identity(2, 2) * 0.25).norm() < 1e-15);
        assert!((g.covariance.view((2, 2), (2, 2)) - Matrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn displaced_ground_state() {
        let h = QuadraticHamiltonian::new(1.0, Matrix::identity(2, 2), Vector::from_row_slice(&[1.0, 0.0])).unwrap();
        let g = ground_state(&h).unwrap();
        assert_eq!(g.mean, Vector::from_row_slice(&[1.0, 0.0, 0.0, 0.0]));
        assert!((g.covariance - Matrix::identity(4, 4) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn unbound_hamiltonian_has_no_ground_state() {
        let h = QuadraticHamiltonian::new(1.0, diag(&[1.0, -1.0]), Vector::zeros(2)).unwrap();
        assert!(matches!(ground_state(&h), Err(Error::NoBoundGroundState)));
    }

    #[test]
    fn ground_state_is_a_fixed_point() {
        let h = QuadraticHamiltonian::new(1.3, Matrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 1.0]), Vector::from_row_slice(&[0.3, -0.2]))
            .unwrap();
        let g = ground_state(&h).unwrap();
        let grid = TimeGrid::over(3.0, 300).unwrap();
        let run = propagate(&g, &h, &grid).unwrap();
        for s in &run {
            assert!((&s.mean - &g.mean).norm() < 1e-10);
            assert!((&s.covariance - &g.covariance).norm() < 1e-10);
        }
    }

    #[test]
    fn displaced_oscillator_follows_closed_form() {
        let h = iso();
        let g = ground_state(&h).unwrap();
        let start = GaussianState::new(Vector::from_row_slice(&[1.0, 0.0, 0.0, 0.0]), g.covariance.clone()).unwrap();
        let grid = TimeGrid::over(2.0 * PI, 2000).unwrap();
        let run = propagate(&start, &h, &grid).unwrap();
        for (t, s) in grid.times().zip(&run) {
            let want = Vector::from_row_slice(&[t.cos(), 0.0, -t.sin(), 0.0]);
            assert!((&s.mean - want).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn free_particle_spreads() {
        // x(t) = x0 + p t, so σ_xx(t) = σ_xx + 2 σ_xp t + σ_pp t²
        let h = QuadraticHamiltonian::new(1.0, Matrix::zeros(1, 1), Vector::zeros(1)).unwrap();
        let cov = Matrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.6]);
        let start = GaussianState::new(Vector::zeros(2), cov).unwrap();
        let grid = TimeGrid::over(1.0, 10).unwrap();
        let end = propagate(&start, &h, &grid).unwrap().pop().unwrap();
        assert!((end.covariance[(0, 0)] - (0.5 + 0.2 + 0.6)).abs() < 1e-12);
        assert!((end.covariance[(0, 1)] - (0.1 + 0.6)).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integration_is_reported() {
        let bad = |t: f64| {
            let k = if t > 0.5 { f64::NAN } else { 1.0 };
            QuadraticHamiltonian::new(1.0, Matrix::identity(1, 1) * k, Vector::zeros(1))
        };
        let g = ground_state(&iso()).unwrap();
        let g1 = GaussianState::new(g.mean.rows(0, 2).into_owned(), g.covariance.view((0, 0), (2, 2)).into_owned()).unwrap();
        let err = propagate(&g1, &bad, &TimeGrid::over(1.0, 10).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 6, .. }), "{err}");
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::over(1.0, 0).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        let g = TimeGrid::over(3.0, 7).unwrap();
        assert_eq!(g.time(7), 3.0);
        assert_eq!(g.times().count(), 8);
    }

    #[test]
    fn identical_states_match() {
        let g = ground_state(&iso()).unwrap();
        let r = state_match(&g, &g, MatchTolerance::default()).unwrap();
        assert_eq!((r.covariance_rel_error, r.mean_offset_widths, r.pass), (0.0, 0.0, true));
    }

    #[test]
    fn scaled_covariance_gives_relative_error() {
        let g = ground_state(&iso()).unwrap();
        let a = GaussianState::new(g.mean.clone(), &g.covariance * 1.01).unwrap();
        let r = state_match(&a, &g, MatchTolerance::default()).unwrap();
        assert!((r.covariance_rel_error - 0.01).abs() < 1e-14);
        assert!(!r.pass);
    }

    #[test]
    fn width_mismatch_between_oscillators() {
        // widths differ by a factor 1.1: σ_x² = 1/2 vs 1/2.2
        let a = ground_state(&iso()).unwrap();
        let h = QuadraticHamiltonian::new(1.0, Matrix::identity(2, 2) * 1.21, Vector::zeros(2)).unwrap();
        let b = ground_state(&h).unwrap();
        let r = state_match(&a, &b, MatchTolerance::default()).unwrap();
        assert!((r.position_rel_error - 0.1).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn mean_offset_in_widths() {
        let g = ground_state(&iso()).unwrap();
        let mut shifted = g.clone();
        shifted.mean[0] += 0.5_f64.sqrt();
        let r = state_match(&shifted, &g, MatchTolerance::default()).unwrap();
        assert!((r.mean_offset_widths - 1.0).abs() < 1e-14);
    }

    #[test]
    fn match_dimension_mismatch() {
        let g = ground_state(&iso()).unwrap();
        let h1 = QuadraticHamiltonian::new(1.0, Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
        let g1 = ground_state(&h1).unwrap();
        assert!(matches!(state_match(&g, &g1, MatchTolerance::default()), Err(Error::DimensionMismatch { .. })));
    }
}
