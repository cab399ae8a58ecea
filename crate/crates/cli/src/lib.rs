//! Library side of `pendctl`: configuration parsing and the command bodies.
//!
//! Exit codes: 0 success, 2 validation, 3 numerical failure (divergence,
//! run termination, uncontrollable or ill-conditioned synthesis), 4 I/O.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::CliError;
