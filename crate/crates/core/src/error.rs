use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

/// Optional time stamp attached to errors raised while sweeping a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AtTime(pub Option<f64>);

impl fmt::Display for AtTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(t) => write!(f, " at t={t}"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} not positive definite{at}")]
    NotPositiveDefinite { what: &'static str, at: AtTime },

    #[error("{what} not symmetric (residual {residual:.3e})")]
    NotSymmetric { what: &'static str, residual: f64 },

    #[error("no bound ground state: curvature matrix is not positive definite")]
    NoBoundGroundState,

    #[error("reality violation: imaginary residue {residual:.3e} in curvature{at}")]
    RealityViolation { residual: f64, at: AtTime },

    #[error("invariant quadratic part is not symplectic (residual {residual:.3e}){at}")]
    NotSymplectic { residual: f64, at: AtTime },

    #[error("non-finite value during integration at step {index} (t={t})")]
    NonFinite { index: usize, t: f64 },

    #[error("trap center undefined: curvature matrix is singular{at}")]
    TrapCenterUndefined { at: AtTime },

    #[error("{what}={value} outside [{lo}, {hi}]")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid blend polynomial: {0}")]
    InvalidBlend(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("grid inadequate: {0}")]
    GridInadequate(String),

    #[error("wave fields live on different grids")]
    GridMismatch,

    #[error("domain escape at t={t}: boundary probability {mass:.3e}")]
    DomainEscape { t: f64, mass: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::RealityViolation { .. }
            | Error::NonFinite { .. }
            | Error::DomainEscape { .. }
            | Error::NotSymplectic { .. }
            | Error::TrapCenterUndefined { .. } => ErrorClass::Numerical,
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }

    /// Stamp a time onto errors that carry one, leaving existing stamps alone.
    pub fn at_time(self, t: f64) -> Self {
        let stamp = |at: AtTime| if at.0.is_some() { at } else { AtTime(Some(t)) };
        match self {
            Error::NotPositiveDefinite { what, at } => Error::NotPositiveDefinite { what, at: stamp(at) },
            Error::RealityViolation { residual, at } => Error::RealityViolation { residual, at: stamp(at) },
            Error::NotSymplectic { residual, at } => Error::NotSymplectic { residual, at: stamp(at) },
            Error::TrapCenterUndefined { at } => Error::TrapCenterUndefined { at: stamp(at) },
            other => other,
        }
    }
}
