use serde::Serialize;

use super::{compute_j, compute_m, Protocol, QuadraticInvariant};
use crate::error::{Error, Result};
use crate::gaussian::{QuadraticHamiltonian, TimeGrid};
use crate::linalg::{self, Matrix};
use crate::schedule::ShapeSchedule;

/// Residuals of the invariant equations of motion at interior grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceResiduals {
    pub times: Vec<f64>,
    /// ‖Γ̇ − (Ω𝒮Γ − Γ𝒮Ω)‖
    pub quadratic: Vec<f64>,
    /// ‖Ẇ − (Ω𝒮W − Γ𝒮V)‖
    pub linear: Vec<f64>,
    /// |θ̇ − Vᵀ𝒮W|
    pub scalar: Vec<f64>,
}

impl InvarianceResiduals {
    pub fn max_quadratic(&self) -> f64 {
        max(&self.quadratic)
    }

    pub fn max_linear(&self) -> f64 {
        max(&self.linear)
    }

    pub fn max_scalar(&self) -> f64 {
        max(&self.scalar)
    }

    /// Largest of the three residual families.
    pub fn max(&self) -> f64 {
        self.max_quadratic().max(self.max_linear()).max(self.max_scalar())
    }

    /// Grid index (into the full protocol) of the largest quadratic residual.
    pub fn argmax_quadratic(&self) -> Option<usize> {
        argmax(&self.quadratic).map(|i| i + 1)
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn argmax(v: &[f64]) -> Option<usize> {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)
}

/// Central-difference check of the invariant equations of motion along a protocol.
pub fn invariance_residual(protocol: &Protocol) -> Result<InvarianceResiduals> {
    let n = protocol.points.len();
    if n < 3 || protocol.grid.len() != n {
        return Err(Error::InvalidGrid(format!("need at least 3 points on the protocol grid, got {n}")));
    }
    let h = protocol.grid.step();
    let d = protocol.dim();
    let s = linalg::symplectic_form(d);
    let mut out = InvarianceResiduals {
        times: Vec::with_capacity(n - 2),
        quadratic: Vec::with_capacity(n - 2),
        linear: Vec::with_capacity(n - 2),
        scalar: Vec::with_capacity(n - 2),
    };
    for i in 1..n - 1 {
        let (prev, cur, next) = (&protocol.points[i - 1], &protocol.points[i], &protocol.points[i + 1]);
        let h_now = cur.hamiltonian(protocol.mass)?;
        let (omega, v) = h_now.matrices();
        let inv = &cur.invariant;

        let gamma_dot = (&next.invariant.gamma - &prev.invariant.gamma) / (2.0 * h);
        let w_dot = (&next.invariant.w - &prev.invariant.w) / (2.0 * h);
        let theta_dot = (next.invariant.theta - prev.invariant.theta) / (2.0 * h);

        let gamma_rhs = &omega * &s * &inv.gamma - &inv.gamma * &s * &omega;
        let w_rhs = &omega * &s * &inv.w - &inv.gamma * &s * &v;
        let theta_rhs = v.dot(&(&s * &inv.w));

        out.times.push(cur.t);
        out.quadratic.push((gamma_dot - gamma_rhs).norm());
        out.linear.push((w_dot - w_rhs).norm());
        out.scalar.push((theta_dot - theta_rhs).abs());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutationResidual {
    /// ‖Ω𝒮Γ − Γ𝒮Ω‖
    pub quadratic: f64,
    /// ‖Ω𝒮W − Γ𝒮V‖
    pub linear: f64,
}

/// How far an invariant is from commuting with a Hamiltonian.
pub fn commutation_residual(inv: &QuadraticInvariant, h: &QuadraticHamiltonian) -> Result<CommutationResidual> {
    let d = h.dim();
    if inv.dim() != d || inv.gamma.nrows() != 2 * d {
        return Err(Error::DimensionMismatch { expected: d, found: inv.dim() });
    }
    let (omega, v) = h.matrices();
    let s = linalg::symplectic_form(d);
    Ok(CommutationResidual {
        quadratic: (&omega * &s * &inv.gamma - &inv.gamma * &s * &omega).norm(),
        linear: (&omega * &s * &inv.w - &inv.gamma * &s * &v).norm(),
    })
}

/// Ordering of the commutator that `dJ/dt` follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum JdotSign {
    /// `dJ/dt = R²M − MR²`
    SquareFirst,
    /// `dJ/dt = MR² − R²M`
    CurvatureFirst,
}

impl std::fmt::Display for JdotSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JdotSign::SquareFirst => "R^2 M - M R^2",
            JdotSign::CurvatureFirst => "M R^2 - R^2 M",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JdotReport {
    /// ‖J(0)‖
    pub initial_norm: f64,
    pub times: Vec<f64>,
    pub square_first: Vec<f64>,
    pub curvature_first: Vec<f64>,
    pub matching: JdotSign,
}

impl JdotReport {
    /// Largest residual of the matching sign.
    pub fn residual(&self) -> f64 {
        match self.matching {
            JdotSign::SquareFirst => max(&self.square_first),
            JdotSign::CurvatureFirst => max(&self.curvature_first),
        }
    }

    /// Largest residual of the other sign.
    pub fn other_residual(&self) -> f64 {
        match self.matching {
            JdotSign::SquareFirst => max(&self.curvature_first),
            JdotSign::CurvatureFirst => max(&self.square_first),
        }
    }
}

/// Differentiate `J` along the shape schedule and compare with both orderings
/// of the commutator of `R²` and `M`.
pub fn jdot_consistency(shape: &ShapeSchedule, grid: TimeGrid) -> Result<JdotReport> {
    if grid.len() < 3 {
        return Err(Error::InvalidGrid("need at least 3 grid points".into()));
    }
    let js: Vec<Matrix> = grid
        .times()
        .map(|t| {
            let s = shape.eval(t)?;
            compute_j(&s.r, &s.r_dot).map_err(|e| e.at_time(t))
        })
        .collect::<Result<_>>()?;
    let h = grid.step();
    let mut report = JdotReport {
        initial_norm: js[0].norm(),
        times: Vec::new(),
        square_first: Vec::new(),
        curvature_first: Vec::new(),
        matching: JdotSign::CurvatureFirst,
    };
    for i in 1..grid.len() - 1 {
        let t = grid.time(i);
        let s = shape.eval(t)?;
        let m = compute_m(&s.r, &s.r_dot, &s.r_ddot).map_err(|e| e.at_time(t))?;
        let r2 = &s.r * &s.r;
        let comm = &r2 * &m - &m * &r2;
        let jdot = (&js[i + 1] - &js[i - 1]) / (2.0 * h);
        report.times.push(t);
        report.square_first.push((&jdot - &comm).norm());
        report.curvature_first.push((&jdot + &comm).norm());
    }
    if max(&report.square_first) < max(&report.curvature_first) {
        report.matching = JdotSign::SquareFirst;
    }
    Ok(report)
}
