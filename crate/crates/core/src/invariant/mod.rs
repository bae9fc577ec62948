//! Quadratic invariants built from a shape matrix `R(t)` and a path `L(t)`.
//!
//! Given `R` (real, symmetric, positive definite) and its derivatives, the
//! auxiliary gauge matrices `J` (real antisymmetric) and `A` (complex
//! anti-Hermitian) follow in closed form in the eigenframe of `R`. From them
//! the trap curvature `M` and force `F` are fixed, and the invariant
//!
//! ```text
//! I = ½ Xᵀ Γ X + Wᵀ X + θ
//! ```
//!
//! is assembled. Its instantaneous ground state has covariance `½Γ⁻¹` and
//! mean `[L; mL̇]`.
//!
//! Two independent routes to `M` are kept: the real eigenframe closed form
//! (used for output) and the complex route through
//! `B = 2[Ṙ,R]_A − 2RA²R − {R̈,R}`, which must come out real.

mod identities;
mod protocol;
mod residual;

pub use identities::{weight_identities, blend_weight, IdentityResiduals};
pub use protocol::{design_protocol, Design, Protocol, ProtocolPoint};
pub use residual::{
    commutation_residual, invariance_residual, jdot_consistency, CommutationResidual, InvarianceResiduals,
    JdotReport, JdotSign,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{AtTime, Error, Result};
use crate::gaussian::GaussianState;
use crate::linalg::{self, block2, stack, CMatrix, Matrix, Vector};

/// Relative bound on the imaginary residue of `M` from the complex route.
pub const REALITY_TOLERANCE: f64 = 1e-10;

/// Bound on ‖Γ𝒮Γ − 𝒮‖ before `Γ⁻¹ = −𝒮Γ𝒮` is trusted.
pub const SYMPLECTIC_TOLERANCE: f64 = 1e-8;

/// Eigenvalues and orthonormal eigenvectors of `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenFrame {
    values: Vector,
    vectors: Matrix,
}

impl EigenFrame {
    pub fn new(r: &Matrix) -> Result<Self> {
        let (values, vectors) = linalg::sym_eigen(r);
        if values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NotPositiveDefinite { what: "R", at: AtTime::default() });
        }
        Ok(Self { values, vectors })
    }

    pub fn values(&self) -> &Vector {
        &self.values
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Matrix elements `⟨Φⱼ|O|Φₖ⟩`.
    pub fn to_frame(&self, o: &Matrix) -> Matrix {
        self.vectors.transpose() * o * &self.vectors
    }

    pub fn from_frame(&self, o: &Matrix) -> Matrix {
        &self.vectors * o * self.vectors.transpose()
    }

    fn to_frame_complex(&self, o: &CMatrix) -> CMatrix {
        let v = linalg::to_complex(&self.vectors);
        v.transpose() * o * v
    }

    fn from_frame_complex(&self, o: &CMatrix) -> CMatrix {
        let v = linalg::to_complex(&self.vectors);
        &v * o * v.transpose()
    }

    /// ‖Σ λᵢ ΦᵢΦᵢᵀ − R‖ / ‖R‖.
    pub fn reconstruction_error(&self, r: &Matrix) -> f64 {
        (self.from_frame(&Matrix::from_diagonal(&self.values)) - r).norm() / r.norm()
    }
}

/// The gauge matrices `J` and `A` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeData {
    pub j: Matrix,
    pub a: CMatrix,
}

impl GaugeData {
    pub fn new(r: &Matrix, r_dot: &Matrix) -> Result<Self> {
        let j = compute_j(r, r_dot)?;
        let a = compute_a(r, r_dot, &j)?;
        Ok(Self { j, a })
    }

    /// ‖J + Jᵀ‖ relative to ‖J‖, absolute when J vanishes.
    pub fn j_antisymmetry(&self) -> f64 {
        let n = self.j.norm();
        let r = (&self.j + self.j.transpose()).norm();
        if n > 0.0 {
            r / n
        } else {
            r
        }
    }

    /// ‖A + A†‖ relative to ‖A‖.
    pub fn a_anti_hermiticity(&self) -> f64 {
        (&self.a + self.a.adjoint()).norm() / self.a.norm()
    }
}

/// Generalised commutator `[x, y]_z = x z y − y z x`.
pub fn generalized_commutator(x: &CMatrix, y: &CMatrix, z: &CMatrix) -> CMatrix {
    x * z * y - y * z * x
}

fn check_shape_inputs(r: &Matrix, others: &[&Matrix]) -> Result<EigenFrame> {
    let d = r.nrows();
    linalg::ensure_square(r, d)?;
    for m in others {
        linalg::ensure_square(m, d)?;
    }
    EigenFrame::new(r)
}

fn j_in_frame(lambda: &Vector, rdot: &Matrix) -> Matrix {
    let d = lambda.len();
    Matrix::from_fn(d, d, |j, k| {
        let (a, b) = (lambda[j], lambda[k]);
        rdot[(j, k)] * (a - b) * (a + b) * (a + b) / (a * a + b * b)
    })
}

/// Antisymmetric gauge matrix `J`, solving `{J, R⁻²} = [Ṙ, R⁻¹] + [R, R⁻²]_Ṙ`.
pub fn compute_j(r: &Matrix, r_dot: &Matrix) -> Result<Matrix> {
    let frame = check_shape_inputs(r, &[r_dot])?;
    let jt = j_in_frame(frame.values(), &frame.to_frame(r_dot));
    let j = frame.from_frame(&jt);
    Ok((&j - j.transpose()) * 0.5)
}

/// `A = iR⁻² + ½[R⁻¹, Ṙ] + ½R⁻¹JR⁻¹`, assembled with matrix products.
pub fn compute_a(r: &Matrix, r_dot: &Matrix, j: &Matrix) -> Result<CMatrix> {
    check_shape_inputs(r, &[r_dot, j])?;
    let r_inv = r.clone().try_inverse().ok_or(Error::NotPositiveDefinite { what: "R", at: AtTime::default() })?;
    let r_inv2 = &r_inv * &r_inv;
    let real = (&r_inv * r_dot - r_dot * &r_inv) * 0.5 + &r_inv * j * &r_inv * 0.5;
    Ok(CMatrix::from_fn(r.nrows(), r.ncols(), |a, b| Complex64::new(real[(a, b)], r_inv2[(a, b)])))
}

/// `A` from its eigenframe closed form `Aⱼₖ = iδⱼₖ/(λⱼλₖ) + Ṙⱼₖ(λⱼ−λₖ)/(λⱼ²+λₖ²)`.
pub fn compute_a_eigenframe(r: &Matrix, r_dot: &Matrix) -> Result<CMatrix> {
    let frame = check_shape_inputs(r, &[r_dot])?;
    let lam = frame.values();
    let rdot = frame.to_frame(r_dot);
    let d = frame.dim();
    let at = CMatrix::from_fn(d, d, |j, k| {
        let (a, b) = (lam[j], lam[k]);
        let im = if j == k { 1.0 / (a * b) } else { 0.0 };
        Complex64::new(rdot[(j, k)] * (a - b) / (a * a + b * b), im)
    });
    Ok(frame.from_frame_complex(&at))
}

/// `B = 2[Ṙ,R]_A − 2RA²R − {R̈,R}`.
pub fn curvature_source(r: &Matrix, r_dot: &Matrix, r_ddot: &Matrix, a: &CMatrix) -> CMatrix {
    let rc = linalg::to_complex(r);
    let rd = linalg::to_complex(r_dot);
    let anti = linalg::to_complex(&(r_ddot * r + r * r_ddot));
    let two = Complex64::new(2.0, 0.0);
    generalized_commutator(&rd, &rc, a) * two - &rc * a * a * &rc * two - anti
}

/// Curvature from the complex route: `Mⱼₖ = Bⱼₖ/(λⱼ²+λₖ²)` in the eigenframe of `R`.
/// The result should be real; its imaginary part is returned untouched.
pub fn compute_m_via_source(r: &Matrix, r_dot: &Matrix, r_ddot: &Matrix) -> Result<CMatrix> {
    let frame = check_shape_inputs(r, &[r_dot, r_ddot])?;
    let j = compute_j(r, r_dot)?;
    let a = compute_a(r, r_dot, &j)?;
    let b = frame.to_frame_complex(&curvature_source(r, r_dot, r_ddot, &a));
    let lam = frame.values();
    let mt = CMatrix::from_fn(frame.dim(), frame.dim(), |j, k| b[(j, k)] / (lam[j] * lam[j] + lam[k] * lam[k]));
    Ok(frame.from_frame_complex(&mt))
}

fn m_in_frame(lambda: &Vector, rdot: &Matrix, rddot: &Matrix) -> Matrix {
    let d = lambda.len();
    Matrix::from_fn(d, d, |j, k| {
        let (a, b) = (lambda[j], lambda[k]);
        let mut m = -(a + b) / (a * a + b * b) * rddot[(j, k)];
        if j == k {
            m += a.powi(-4);
        }
        for l in 0..d {
            m += 2.0 * rdot[(j, l)] * rdot[(l, k)] * blend_weight(a, b, lambda[l]);
        }
        m
    })
}

/// Trap curvature `M` for the shape `(R, Ṙ, R̈)`.
///
/// Evaluated with the real eigenframe closed form; the complex route is run
/// alongside and must be real to within [`REALITY_TOLERANCE`].
pub fn compute_m(r: &Matrix, r_dot: &Matrix, r_ddot: &Matrix) -> Result<Matrix> {
    let frame = check_shape_inputs(r, &[r_dot, r_ddot])?;
    let closed = frame.from_frame(&m_in_frame(frame.values(), &frame.to_frame(r_dot), &frame.to_frame(r_ddot)));

    let complex = compute_m_via_source(r, r_dot, r_ddot)?;
    let scale = complex.norm();
    let imag = complex.map(|z| z.im).norm();
    let residual = if scale > 0.0 { imag / scale } else { imag };
    if !(residual <= REALITY_TOLERANCE) {
        return Err(Error::RealityViolation { residual, at: AtTime::default() });
    }
    Ok(linalg::symmetrize(&closed))
}

/// `F = m (L̈ + M L)`.
pub fn compute_f(l_ddot: &Vector, curvature: &Matrix, l: &Vector, mass: f64) -> Result<Vector> {
    let d = l.len();
    if l_ddot.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: l_ddot.len() });
    }
    linalg::ensure_square(curvature, d)?;
    Ok((l_ddot + curvature * l) * mass)
}

/// Residual `R̈ + R M − R⁻³` of the one-dimensional Ermakov equation.
pub fn ermakov_residual(r: f64, r_ddot: f64, m: f64) -> f64 {
    r_ddot + r * m - r.powi(-3)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadraticInvariant {
    pub gamma: Matrix,
    pub w: Vector,
    pub theta: f64,
}

impl QuadraticInvariant {
    pub fn dim(&self) -> usize {
        self.w.len() / 2
    }

    /// ‖Γ𝒮Γ − 𝒮‖.
    pub fn symplectic_residual(&self) -> f64 {
        let s = linalg::symplectic_form(self.dim());
        (&self.gamma * &s * &self.gamma - s).norm()
    }

    /// `Γ⁻¹ = −𝒮Γ𝒮`, valid for symplectic Γ.
    pub fn gamma_inverse(&self) -> Matrix {
        let s = linalg::symplectic_form(self.dim());
        -(&s * &self.gamma * &s)
    }

    /// Instantaneous ground state of the invariant: `Σ = ½Γ⁻¹`, `X = −Γ⁻¹W`.
    pub fn ground_state(&self) -> GaussianState {
        let inv = self.gamma_inverse();
        GaussianState { mean: -(&inv * &self.w), covariance: linalg::symmetrize(&(inv * 0.5)) }
    }
}

/// Assemble `(Γ, W, θ)` from the shape, the path and the mass.
pub fn build_invariant(r: &Matrix, r_dot: &Matrix, l: &Vector, l_dot: &Vector, mass: f64) -> Result<QuadraticInvariant> {
    let d = r.nrows();
    check_shape_inputs(r, &[r_dot])?;
    if l.len() != d || l_dot.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: l.len().max(l_dot.len()) });
    }
    let gauge = GaugeData::new(r, r_dot)?;
    let rc = linalg::to_complex(r);
    let rd = linalg::to_complex(r_dot);
    let a = &gauge.a;
    let mixed = (generalized_commutator(&rd, &rc, a) - &rc * a * a * &rc).map(|z| z.re);
    let upper_left = linalg::symmetrize(&((r_dot * r_dot + mixed) * mass));
    let anti = r * r_dot + r_dot * r;
    let upper_right = (&gauge.j - &anti) * 0.5;
    let lower_left = (-&gauge.j - &anti) * 0.5;
    let lower_right = linalg::symmetrize(&(r * r / mass));
    let gamma = linalg::symmetrize(&block2(&upper_left, &upper_right, &lower_left, &lower_right));

    let mut inv = QuadraticInvariant { gamma, w: Vector::zeros(2 * d), theta: 0.0 };
    let residual = inv.symplectic_residual();
    if !(residual <= SYMPLECTIC_TOLERANCE) {
        return Err(Error::NotSymplectic { residual, at: AtTime::default() });
    }
    let z = stack(l, &(l_dot * mass));
    inv.w = -(&inv.gamma * z);
    inv.theta = 0.5 * inv.w.dot(&(inv.gamma_inverse() * &inv.w));
    Ok(inv)
}
