//! Trusted dense reference computations, kept independent of the factorized
//! integrator so the two routes can cross-check each other: a fixed-step RK4
//! full-tensor integrator with a self-consistency gate, the classical
//! low-rank matrix projector-splitting step, and error-record plumbing.

mod dense;
mod error;
mod ksl;
mod report;

pub use dense::{dense_integrate, DENSE_BUDGET};
pub use error::OracleError;
pub use ksl::{matrix_ksl_step, MatrixFactorization};
pub use report::{error_report, ErrorRecord};
