//! Error type shared across the solver pipeline.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix expected to be symmetric positive definite failed a pivot test.
    NotSpd { pivot: usize, value: f64 },
    /// A factorization hit a (numerically) zero pivot block.
    Singular { context: String },
    /// An eigensolver exceeded its sweep limit.
    EigIterLimit { index: usize },
    /// Invalid user-facing configuration (mesh sizes, thresholds, CLI input).
    Config(String),
    /// The capacitance matrix of a low-rank update is singular; the
    /// threshold selection produced an inconsistent correction.
    SingularCapacitance { kind: String, eta: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotSpd { pivot, value } => {
                write!(f, "matrix is not positive definite: pivot {pivot} = {value:e}")
            }
            Error::Singular { context } => write!(f, "singular matrix in {context}"),
            Error::EigIterLimit { index } => {
                write!(f, "eigensolver failed to converge at index {index}")
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::SingularCapacitance { kind, eta } => write!(
                f,
                "singular capacitance matrix for {kind} at eta = {eta}; \
                 the selected eigenspace yields an inconsistent correction"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
