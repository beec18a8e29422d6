//! Probabilistic linear solvers.
//!
//! Gaussian inference over the solution of `A x = b`, either directly on `x`
//! (solution-based inference) or on `A⁻¹` (matrix-based inference), together
//! with the classical projection methods (CG, GMRES, general Petrov–Galerkin
//! steps) whose iterates the posterior means reproduce.
//!
//! Everything is dense and desk-scale: a few hundred unknowns at most.

pub mod calibration;
pub mod chi2;
pub mod error;
pub mod gaussian;
pub mod gmres;
pub mod linalg;
pub mod mbi;
pub mod par;
pub mod projection;
pub mod sbi;
#[cfg(test)]
pub(crate) mod testing;
pub mod trace;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use par::Execution;
pub use trace::{SolverTrace, TraceStep};
