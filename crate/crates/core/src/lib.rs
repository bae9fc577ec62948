//! Multi-dimensional Gaussian invariants for inverse-engineering quadratic traps.
//!
//! Pick a shape schedule `R(t)` and a path `L(t)`; the [`invariant`] module
//! turns them into the trap curvature `M(t)` and force `F(t)` that carry the
//! ground state of the initial trap to the ground state of the final one.
//! [`gaussian`] propagates moments to check the result, [`corner`] builds the
//! corner-shuttling scenario and [`oracle`] solves the Schrödinger equation on
//! a grid as an independent reference.

pub mod corner;
pub mod error;
pub mod gaussian;
pub mod invariant;
pub mod linalg;
pub mod oracle;
pub mod schedule;

pub use error::{Error, ErrorClass, Result};
pub use gaussian::{
    ground_state, propagate, state_match, GaussianState, HamiltonianSchedule, MatchReport, MatchTolerance,
    QuadraticHamiltonian, TimeGrid,
};
pub use invariant::{build_invariant, design_protocol, Design, Protocol, QuadraticInvariant};
pub use schedule::{BlendPolynomial, PathSchedule, Polynomial, ShapeSchedule};
