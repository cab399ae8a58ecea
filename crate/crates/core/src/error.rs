use thiserror::Error;

use crate::sim::Trace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("the zero polynomial has no roots")]
    ZeroPolynomial,

    #[error("expected {expected} poles, got {got}")]
    PoleCount { expected: usize, got: usize },

    #[error("pole {re} {im:+}i is not in the open left half-plane")]
    UnstablePole { re: f64, im: f64 },

    #[error("pole set is not closed under complex conjugation")]
    NotConjugateClosed,

    #[error("closed-loop denominator is not Hurwitz")]
    NotHurwitz,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("pair is not controllable: controllability rank {rank} < {dim}")]
    Uncontrollable { rank: usize, dim: usize },

    #[error(
        "pole placement failed the eigenvalue round trip (relative error {error:.3e}, \
         controllability condition estimate {condition:.3e})"
    )]
    IllConditioned { condition: f64, error: f64 },

    #[error("closed-loop matrix is defective or near-defective (eigenvector condition {0:.3e})")]
    Defective(f64),

    #[error("state became non-finite at t = {t} s")]
    NonFinite { t: f64 },

    #[error("simulation diverged at t = {t} s after {} samples", partial.len())]
    Diverged { t: f64, partial: Box<Trace> },

    #[error("trace provenance mismatch: {0}")]
    Provenance(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
