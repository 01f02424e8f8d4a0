//! Smooth first-order minimization with approximate gradients.
//!
//! Minimizes smoothed maximum-eigenvalue objectives over simple convex sets
//! using an optimal first-order scheme whose gradient oracle is only required
//! to be accurate up to a certified error `delta`. Gradients of the smoothed
//! spectral objective are approximated from a few leading eigenpairs instead
//! of a full matrix exponential, which is where the computational savings
//! come from.

pub mod error;
pub mod linalg;
pub mod problems;
pub mod randgen;
pub mod smoothing;
pub mod solver;

pub use error::Error;
pub use smoothing::{OracleResult, SmoothingConfig};
pub use solver::{FeasibleSet, SolveResult, SolverState, StepSchedule};
pub use linalg::{EigPartial, SymMatrix};


