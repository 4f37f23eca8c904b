//! Error type shared by all solver modules.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// Grid sizes violate a precondition (zero counts, non-conforming nesting).
    Grid(String),
    /// Degenerate or out-of-domain fracture geometry.
    Geometry(String),
    /// A matrix expected to be symmetric positive definite failed to factorize.
    NotPositiveDefinite { pivot: usize, value: f64 },
    /// A constraint row is identically zero or linearly dependent.
    RankDeficientConstraint { row: usize },
    /// Incompatible operand shapes.
    ShapeMismatch { expected: (usize, usize), got: (usize, usize) },
    /// A solve finished above its residual contract.
    SolverTolerance { residual: f64, tolerance: f64 },
    /// Relative error against a zero-norm reference is undefined.
    ZeroNormReference,
    /// Configuration file or flag rejected, with the offending field.
    Config(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Grid(msg) => write!(f, "grid error: {msg}"),
            Error::Geometry(msg) => write!(f, "geometry error: {msg}"),
            Error::NotPositiveDefinite { pivot, value } => {
                write!(f, "matrix not positive definite: pivot {pivot} = {value:e}")
            }
            Error::RankDeficientConstraint { row } => {
                write!(f, "constraint row {row} is rank deficient")
            }
            Error::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected {expected:?}, got {got:?}")
            }
            Error::SolverTolerance { residual, tolerance } => {
                write!(f, "solver residual {residual:e} above tolerance {tolerance:e}")
            }
            Error::ZeroNormReference => write!(f, "relative error undefined: reference has zero norm"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
