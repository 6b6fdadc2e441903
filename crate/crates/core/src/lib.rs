//! Mild solutions of the heat equation on the half-space with nonlinear,
//! singular boundary potentials.
//!
//! The crate discretizes the truncated half-space on tensor-product grids,
//! evaluates the heat semigroup and boundary Duhamel operators by separable
//! kernel sweeps, measures fields in discrete Lorentz norms, runs the Picard
//! iteration for the integral formulation, and provides numerical checks of
//! the decay, scaling and symmetry properties of the solutions.

pub mod error;
pub mod grid;
pub mod kernel;
pub mod lorentz;
pub mod operators;
pub mod quadrature;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{BoundaryFunction, Grid, GridFunction, GridSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
