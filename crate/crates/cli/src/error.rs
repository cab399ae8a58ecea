use std::fmt;

use pendulum_control::Error;

/// Failure classes with stable process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments. Exit code 2.
    Validation(String),
    /// Numerical failure: divergence, run termination, uncontrollable or
    /// ill-conditioned synthesis. Exit code 3.
    Numerical(String),
    /// File system failure. Exit code 4.
    Io(String),
}

impl CliError {
    pub const VALIDATION: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const IO: u8 = 4;

    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => Self::VALIDATION,
            CliError::Numerical(_) => Self::NUMERICAL,
            CliError::Io(_) => Self::IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::DimensionMismatch(_)
            | Error::ZeroPolynomial
            | Error::PoleCount { .. }
            | Error::UnstablePole { .. }
            | Error::NotConjugateClosed
            | Error::Provenance(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
