//! Symmetric multi-type non-negative matrix tri-factorization (SNMTF).
//!
//! Given symmetric non-negative matrices `R_1 … R_N` of order `n`, find a
//! non-negative `G` (`n × k`) and symmetric non-negative `S_1 … S_N`
//! (`k × k`) minimising
//!
//! ```text
//! SE = Σ_i ‖R_i − G S_i Gᵀ‖²
//! ```
//!
//! Four solvers share one problem model, one initialisation module and one
//! convergence monitor:
//!
//! - [`fpm`]: fixed-point (multiplicative update) iteration,
//! - [`bcd`]: two-block coordinate descent with projected gradient steps and
//!   exact line searches,
//! - [`gmels`]: gradient method with exact line search on the
//!   square-transformed objective (degree-12 step polynomial),
//! - [`adam`]: ADAM on the absolute-value-transformed objective.
//!
//! [`data`] builds planted synthetic benchmarks and reads/writes bundles,
//! [`harness`] implements the `snmtf` command line tool.

pub mod adam;
pub mod bcd;
pub mod data;
pub mod error;
pub mod fpm;
pub mod gmels;
pub mod gradients;
pub mod harness;
pub mod init;
pub mod linalg;
pub mod model;
pub mod poly;
pub mod solver;
pub mod tune;

mod monitor;

pub use error::{Error, Result};
pub use gradients::{Gradient, TransformKind};
pub use model::{
    AdamParams, ConvergenceTrace, Coords, DataBundle, Factorization, Matrix, Method,
    SolverConfig, StopReason, TraceRecord,
};
pub use poly::LinePolynomial;
pub use solver::{solve, InitKind, Solution};
