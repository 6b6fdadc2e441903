//! Heat semigroup, boundary trace, boundary single-layer operators and the
//! Duhamel terms of the integral formulation.
//!
//! All kernel operators are evaluated as separable sweeps: the Green function
//! factors into one-dimensional Gaussians, and each factor is integrated
//! exactly over source cells (`erf` differences) and evaluated at target
//! centroids.

mod duhamel;
mod nonlinearity;
mod potential;
mod semigroup;
pub mod sweep;

pub use duhamel::{
    duhamel_H, nonlinear_term, potential_term, BoundaryTrajectory, TimeQuadrature,
    DEFAULT_TIME_NODES, MIN_TIME_NODES,
};
pub use nonlinearity::{NonlinearityForm, NonlinearitySpec};
pub use potential::{evaluate_potential, Pole, PoleKind, Potential};
pub use semigroup::{g1_boundary, g1_interior, g2, heat_semigroup, heat_semigroup_trace, Operators};
