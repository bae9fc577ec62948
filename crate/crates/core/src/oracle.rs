//! Split-step Fourier solver for the two-dimensional Schrödinger equation.
//!
//! Used as an independent reference for the moment-based propagation: the
//! designed potential `V(x, t) = ½ m xᵀM(t)x − F(t)ᵀx` is applied to a wave
//! function on a periodic grid, with Strang splitting and the potential
//! evaluated at the midpoint of each step.
//!
//! Grids are row-major with `x` fastest: `data[iy * n + ix]`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::corner::{build_scenario, CornerScenario};
use crate::error::{Error, Result};
use crate::gaussian::{ground_state, propagate, GaussianState, HamiltonianSchedule, QuadraticHamiltonian, TimeGrid};
use crate::invariant::Design;
use crate::linalg::{Matrix, Vector};

/// Ground-state widths kept between any part of the state and the border.
pub const DOMAIN_MARGIN: f64 = 8.0;
/// Probability allowed within [`BORDER_CELLS`] cells of the border.
pub const BORDER_MASS_LIMIT: f64 = 1e-6;
pub const BORDER_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per axis, a power of two.
    pub points: usize,
    pub center: [f64; 2],
    pub half_widths: [f64; 2],
    pub time_step: f64,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 8 || !self.points.is_power_of_two() {
            return Err(Error::GridInadequate(format!("points per axis must be a power of two >= 8, got {}", self.points)));
        }
        if !self.half_widths.iter().all(|w| *w > 0.0 && w.is_finite()) {
            return Err(Error::GridInadequate("half widths must be positive".into()));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::GridInadequate("time step must be positive".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> [f64; 2] {
        [2.0 * self.half_widths[0] / self.points as f64, 2.0 * self.half_widths[1] / self.points as f64]
    }

    pub fn origin(&self) -> [f64; 2] {
        [self.center[0] - self.half_widths[0], self.center[1] - self.half_widths[1]]
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.origin()[axis] + i as f64 * self.spacing()[axis]
    }

    pub fn wavenumber(&self, axis: usize, j: usize) -> f64 {
        let n = self.points;
        let signed = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
        2.0 * std::f64::consts::PI * signed / (n as f64 * self.spacing()[axis])
    }

    pub fn cell_area(&self) -> f64 {
        let [dx, dy] = self.spacing();
        dx * dy
    }

    /// Largest momentum representable without aliasing.
    pub fn max_momentum(&self, axis: usize) -> f64 {
        std::f64::consts::PI / self.spacing()[axis]
    }

    /// Check that a Gaussian state sits inside the domain with the required
    /// margin, in both position and momentum.
    pub fn check_state(&self, state: &GaussianState) -> Result<()> {
        if state.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: state.dim() });
        }
        let origin = self.origin();
        for axis in 0..2 {
            let sx = state.covariance[(axis, axis)].sqrt();
            let lo = origin[axis];
            let hi = lo + 2.0 * self.half_widths[axis];
            let x = state.mean[axis];
            if x - DOMAIN_MARGIN * sx < lo || x + DOMAIN_MARGIN * sx > hi {
                return Err(Error::GridInadequate(format!(
                    "axis {axis}: state at {x:.4} with width {sx:.4} leaves [{lo:.4}, {hi:.4}] with {DOMAIN_MARGIN} widths margin"
                )));
            }
            let sp = state.covariance[(axis + 2, axis + 2)].sqrt();
            let p = state.mean[axis + 2];
            let kmax = self.max_momentum(axis);
            if p.abs() + DOMAIN_MARGIN * sp > kmax {
                return Err(Error::GridInadequate(format!(
                    "axis {axis}: momentum {p:.4} with width {sp:.4} exceeds grid cutoff {kmax:.4}"
                )));
            }
        }
        Ok(())
    }

    /// Smallest domain (at `points` per axis) covering all `states` with margin.
    pub fn covering(states: &[GaussianState], points: usize, time_step: f64) -> Result<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for s in states {
            for axis in 0..2 {
                let w = DOMAIN_MARGIN * s.covariance[(axis, axis)].sqrt();
                lo[axis] = lo[axis].min(s.mean[axis] - w);
                hi[axis] = hi[axis].max(s.mean[axis] + w);
            }
        }
        // one extra cell at the top end: the grid is half-open
        let pad = |axis: usize| 0.5 * (hi[axis] - lo[axis]) * (1.0 + 2.0 / points as f64);
        let spec = Self {
            points,
            center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
            half_widths: [pad(0), pad(1)],
            time_step,
        };
        spec.validate()?;
        for s in states {
            spec.check_state(s)?;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: GridSpec,
    pub t: f64,
    pub data: Vec<Complex64>,
}

impl WaveField {
    pub fn from_fn(grid: GridSpec, t: f64, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        grid.validate()?;
        let n = grid.points;
        let mut data = Vec::with_capacity(n * n);
        for iy in 0..n {
            let y = grid.coordinate(1, iy);
            for ix in 0..n {
                data.push(f(grid.coordinate(0, ix), y));
            }
        }
        Ok(Self { grid, t, data })
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalize(&mut self) {
        let s = self.norm_squared().sqrt();
        self.data.iter_mut().for_each(|z| *z /= s);
    }

    /// Probability within `cells` cells of any border.
    pub fn border_mass(&self, cells: usize) -> f64 {
        let n = self.grid.points;
        let near = |i: usize| i < cells || i >= n - cells;
        let mut sum = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                if near(ix) || near(iy) {
                    sum += self.data[iy * n + ix].norm_sqr();
                }
            }
        }
        sum * self.grid.cell_area()
    }

    pub fn density(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Write `|ψ|²` as a binary snapshot.
    ///
    /// Layout, all little-endian: magic `PSI2`, `u32` version 1, `u32` nx,
    /// `u32` ny, `f64` dx, dy, x0, y0, t, then nx·ny `f64` values row-major
    /// with x fastest.
    pub fn write_density(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let n = self.grid.points as u32;
        let [dx, dy] = self.grid.spacing();
        let [x0, y0] = self.grid.origin();
        out.write_all(b"PSI2")?;
        for v in [1u32, n, n] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in [dx, dy, x0, y0, self.t] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in self.density() {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Normalised Gaussian ground state of `h` on `grid`.
pub fn analytic_ground_state(h: &QuadraticHamiltonian, grid: GridSpec) -> Result<WaveField> {
    if h.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: h.dim() });
    }
    grid.validate()?;
    let g = ground_state(h)?;
    grid.check_state(&g)?;
    Ok(gaussian_field(&g, grid, 0.0))
}

/// Pure Gaussian with real position-space profile (no position-momentum
/// correlation) and the mean momentum of `state` applied as a plane wave.
fn gaussian_field(state: &GaussianState, grid: GridSpec, t: f64) -> WaveField {
    let sxx = state.position_covariance();
    let prec = sxx.clone().try_inverse().unwrap_or_else(|| Matrix::identity(2, 2));
    let (cx, cy) = (state.mean[0], state.mean[1]);
    let (px, py) = (state.mean[2], state.mean[3]);
    let mut psi = WaveField::from_fn(grid, t, |x, y| {
        let (u, v) = (x - cx, y - cy);
        let q = prec[(0, 0)] * u * u + 2.0 * prec[(0, 1)] * u * v + prec[(1, 1)] * v * v;
        Complex64::from_polar((-0.25 * q).exp(), px * x + py * y)
    })
    .expect("grid validated by caller");
    psi.normalize();
    psi
}

struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::default(); len],
            transposed: vec![Complex64::default(); n * n],
        }
    }

    fn transpose(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        for iy in 0..n {
            for ix in 0..n {
                self.transposed[ix * n + iy] = data[iy * n + ix];
            }
        }
        data.copy_from_slice(&self.transposed);
    }

    fn run(&mut self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { self.inverse.clone() } else { self.forward.clone() };
        plan.process_with_scratch(data, &mut self.scratch);
        self.transpose(data);
        plan.process_with_scratch(data, &mut self.scratch);
        self.transpose(data);
        if inverse {
            let s = 1.0 / (self.n * self.n) as f64;
            data.iter_mut().for_each(|z| *z *= s);
        }
    }

    fn forward(&mut self, data: &mut [Complex64]) {
        self.run(data, false)
    }

    fn inverse(&mut self, data: &mut [Complex64]) {
        self.run(data, true)
    }
}

/// Phase-space mean and covariance `(x, y, p_x, p_y)` of a normalised field.
pub fn moments(psi: &WaveField) -> GaussianState {
    let g = psi.grid;
    let n = g.points;
    let da = g.cell_area();
    let mut fft = Fft2::new(n);
    let mut spectrum = psi.data.clone();
    fft.forward(&mut spectrum);

    // −i∂ψ for each axis, by spectral differentiation
    let mut grads = [spectrum.clone(), spectrum.clone()];
    for iy in 0..n {
        for ix in 0..n {
            let idx = iy * n + ix;
            grads[0][idx] *= g.wavenumber(0, ix);
            grads[1][idx] *= g.wavenumber(1, iy);
        }
    }
    for grad in grads.iter_mut() {
        fft.inverse(grad);
    }

    let mut pos = [0.0; 2];
    let mut pos2 = [[0.0; 2]; 2];
    let mut mixed = [[0.0; 2]; 2];
    let mut mom = [0.0; 2];
    for iy in 0..n {
        for ix in 0..n {
            let idx = iy * n + ix;
            let z = psi.data[idx];
            let w = z.norm_sqr();
            let r = [g.coordinate(0, ix), g.coordinate(1, iy)];
            for a in 0..2 {
                pos[a] += w * r[a];
                for b in 0..2 {
                    pos2[a][b] += w * r[a] * r[b];
                    mixed[a][b] += (z.conj() * grads[b][idx]).re * r[a];
                }
                mom[a] += (z.conj() * grads[a][idx]).re;
            }
        }
    }

    let mut kin = [[0.0; 2]; 2];
    let mut knorm = 0.0;
    for iy in 0..n {
        for ix in 0..n {
            let w = spectrum[iy * n + ix].norm_sqr();
            let k = [g.wavenumber(0, ix), g.wavenumber(1, iy)];
            knorm += w;
            for a in 0..2 {
                for b in 0..2 {
                    kin[a][b] += w * k[a] * k[b];
                }
            }
        }
    }

    let mean = Vector::from_row_slice(&[pos[0] * da, pos[1] * da, mom[0] * da, mom[1] * da]);
    let mut cov = Matrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            cov[(a, b)] = pos2[a][b] * da - mean[a] * mean[b];
            cov[(a, b + 2)] = mixed[a][b] * da - mean[a] * mean[b + 2];
            cov[(a + 2, b + 2)] = kin[a][b] / knorm - mean[a + 2] * mean[b + 2];
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            cov[(b + 2, a)] = cov[(a, b + 2)];
        }
    }
    GaussianState { mean, covariance: cov }
}

/// `|⟨ψ|φ⟩|²`.
pub fn overlap_fidelity(psi: &WaveField, phi: &WaveField) -> Result<f64> {
    if psi.grid != phi.grid {
        return Err(Error::GridMismatch);
    }
    let inner: Complex64 = psi.data.iter().zip(&phi.data).map(|(a, b)| a.conj() * b).sum();
    Ok((inner * psi.grid.cell_area()).norm_sqr().min(1.0))
}

/// Moments recorded while evolving.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSample {
    pub index: usize,
    pub t: f64,
    pub state: GaussianState,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub field: WaveField,
    pub samples: Vec<MomentSample>,
    /// Largest |‖ψ‖ − 1| seen after any step.
    pub max_norm_error: f64,
}

/// Evolve `psi` over `steps` steps of `grid.time_step` under `schedule`.
/// Moments are recorded every `sample_every` steps (and at the end) when
/// `sample_every > 0`.
pub fn evolve_tdse<H: HamiltonianSchedule + ?Sized>(
    psi: &WaveField,
    schedule: &H,
    steps: usize,
    sample_every: usize,
) -> Result<Evolution> {
    let g = psi.grid;
    g.validate()?;
    let n = g.points;
    let dt = g.time_step;
    let mut fft = Fft2::new(n);

    let kinetic = |mass: f64, tau: f64| -> Vec<Complex64> {
        let mut out = Vec::with_capacity(n * n);
        for iy in 0..n {
            let ky = g.wavenumber(1, iy);
            for ix in 0..n {
                let kx = g.wavenumber(0, ix);
                out.push(Complex64::from_polar(1.0, -(kx * kx + ky * ky) / (2.0 * mass) * tau));
            }
        }
        out
    };

    let mass = schedule.hamiltonian(psi.t)?.mass();
    let half = kinetic(mass, 0.5 * dt);
    let full: Vec<Complex64> = half.iter().map(|z| z * z).collect();
    let xs: Vec<f64> = (0..n).map(|i| g.coordinate(0, i)).collect();
    let ys: Vec<f64> = (0..n).map(|i| g.coordinate(1, i)).collect();

    let mut out = Evolution { field: psi.clone(), samples: Vec::new(), max_norm_error: 0.0 };
    let record = |field: &WaveField, index: usize, out: &mut Evolution| -> Result<()> {
        let norm = field.norm_squared().sqrt();
        out.max_norm_error = out.max_norm_error.max((norm - 1.0).abs());
        let mass = field.border_mass(BORDER_CELLS);
        if mass > BORDER_MASS_LIMIT {
            return Err(Error::DomainEscape { t: field.t, mass });
        }
        if sample_every > 0 && (index % sample_every == 0 || index == steps) {
            out.samples.push(MomentSample { index, t: field.t, state: moments(field), norm });
        }
        Ok(())
    };
    record(&out.field.clone(), 0, &mut out)?;

    let t0 = psi.t;
    let mut work = psi.data.clone();
    fft.forward(&mut work);
    mul(&mut work, &half);
    for i in 0..steps {
        let mid = t0 + (i as f64 + 0.5) * dt;
        let h = schedule.hamiltonian(mid)?;
        let (m, f) = (h.curvature(), h.force());
        let hm = 0.5 * h.mass();
        fft.inverse(&mut work);
        for (iy, y) in ys.iter().enumerate() {
            for (ix, x) in xs.iter().enumerate() {
                let v = hm * (m[(0, 0)] * x * x + 2.0 * m[(0, 1)] * x * y + m[(1, 1)] * y * y) - f[0] * x - f[1] * y;
                work[iy * n + ix] *= Complex64::from_polar(1.0, -v * dt);
            }
        }
        fft.forward(&mut work);
        let index = i + 1;
        let t = t0 + index as f64 * dt;
        let check = index == steps || (sample_every > 0 && index % sample_every == 0) || index % 16 == 0;
        if check {
            mul(&mut work, &half);
            let mut field = WaveField { grid: g, t, data: work.clone() };
            fft.inverse(&mut field.data);
            record(&field, index, &mut out)?;
            if index == steps {
                out.field = field;
            } else {
                mul(&mut work, &half);
            }
        } else {
            mul(&mut work, &full);
        }
    }
    if steps == 0 {
        out.field = psi.clone();
    }
    Ok(out)
}

fn mul(data: &mut [Complex64], by: &[Complex64]) {
    data.iter_mut().zip(by).for_each(|(a, b)| *a *= b);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub ratio: f64,
    pub duration: f64,
    /// Arc radius in ground-state widths of the weak axis.
    pub radius_widths: f64,
    pub points: usize,
    pub steps: usize,
    pub samples: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { ratio: 2.0, duration: 5.0, radius_widths: 10.0, points: 256, steps: 2000, samples: 40 }
    }
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub scenario: CornerScenario,
    pub grid: GridSpec,
    pub fidelity: f64,
    pub max_norm_error: f64,
    /// Largest entrywise difference between grid moments and the Gaussian propagation.
    pub max_moment_error: f64,
    pub samples: Vec<MomentSample>,
    pub reference: Vec<GaussianState>,
    pub final_field: WaveField,
}

/// Run the scaled-down corner protocol through the grid solver.
pub fn run_corner_oracle(cfg: &OracleConfig) -> Result<OracleReport> {
    if cfg.steps == 0 || cfg.samples == 0 || cfg.steps % cfg.samples != 0 {
        return Err(Error::GridInadequate(format!(
            "steps ({}) must be a positive multiple of samples ({})",
            cfg.steps, cfg.samples
        )));
    }
    let mut scenario = CornerScenario::new(cfg.ratio, cfg.duration)?;
    scenario.radius = cfg.radius_widths * (1.0 / (2.0 * scenario.mass * scenario.omega_t)).sqrt();
    let setup = build_scenario(&scenario)?;
    let design = Design::new(setup.shape.clone(), setup.path.clone(), scenario.mass)?;
    design.check_initial_rest()?;

    let time = TimeGrid::over(scenario.duration, cfg.steps)?;
    let reference = propagate(&ground_state(&setup.initial)?, &design, &time)?;
    let grid = GridSpec::covering(&reference, cfg.points, time.step())?;

    let psi0 = analytic_ground_state(&setup.initial, grid)?;
    let every = cfg.steps / cfg.samples;
    let evo = evolve_tdse(&psi0, &design, cfg.steps, every)?;
    let target = analytic_ground_state(&setup.target, grid)?;
    let fidelity = overlap_fidelity(&evo.field, &target)?;

    let mut max_moment_error = 0.0_f64;
    for s in &evo.samples {
        let r = &reference[s.index];
        let dm = (&s.state.mean - &r.mean).amax();
        let dc = (&s.state.covariance - &r.covariance).amax();
        max_moment_error = max_moment_error.max(dm).max(dc);
    }
    Ok(OracleReport {
        scenario,
        grid,
        fidelity,
        max_norm_error: evo.max_norm_error,
        max_moment_error,
        samples: evo.samples,
        reference: reference.into_iter().step_by(every).collect(),
        final_field: evo.field,
    })
}
