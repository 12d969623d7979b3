//! Sparse iterative solvers: storage formats, stationary splittings,
//! Chebyshev acceleration, the conjugate-gradient family with
//! preconditioners, and Krylov methods for symmetric and nonsymmetric
//! systems.

pub mod chebyshev;
pub mod cli;
pub mod dispatch;
pub mod error;
pub mod krylov_spd;
pub mod krylov_nonsymmetric;
pub mod krylov_symmetric;
pub mod linalg;
pub mod preconditioners;
pub mod problems;
pub mod report;
pub mod sparse;
pub mod stationary;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use report::{BreakdownKind, SolveReport, SolverOptions, Status, TolKind, Tolerance};
