//! Discrete fractional calculus of variations on uniform integer grids.
//!
//! The crate is organized bottom up:
//!
//! - [`fraccalc`]: fractional sums and differences of grid functions,
//! - [`expr`]: a small expression language for integrands with exact first
//!   and second partial derivatives,
//! - [`variational`]: summed functionals, their Euler-Lagrange residuals,
//!   natural boundary conditions, and the second-order (Legendre) condition,
//! - [`solver`]: a damped Newton solver for the stationarity system, a
//!   derivative-free reference minimizer, and parameter sweeps.

pub mod expr;
pub mod fraccalc;
pub mod solver;
pub mod variational;

pub use expr::Expression;
pub use fraccalc::{Grid, GridFunction};
pub use solver::{JacobianMode, Solution, SolverError, SolverOptions};
pub use variational::{Boundary, Lagrangian, ProblemSpec};
