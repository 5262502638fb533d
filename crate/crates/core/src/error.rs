//! Error types shared across the crate.

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TomoError>;

/// A single violated POVM condition, identified by the offending element.
#[derive(Debug, Clone, PartialEq)]
pub enum PovmViolation {
    NotSquare { index: usize, rows: usize, cols: usize },
    WrongDimension { index: usize, expected: usize, found: usize },
    NotHermitian { index: usize, deviation: f64 },
    NotPositive { index: usize, min_eigenvalue: f64 },
    IncompleteSum { residual: f64 },
}

impl fmt::Display for PovmViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSquare { index, rows, cols } => {
                write!(f, "element {index} is {rows}x{cols}, not square")
            }
            Self::WrongDimension { index, expected, found } => {
                write!(f, "element {index} has dimension {found}, expected {expected}")
            }
            Self::NotHermitian { index, deviation } => {
                write!(f, "element {index} is not Hermitian (max entry deviation {deviation:.3e})")
            }
            Self::NotPositive { index, min_eigenvalue } => {
                write!(f, "element {index} has negative eigenvalue {min_eigenvalue:.3e}")
            }
            Self::IncompleteSum { residual } => {
                write!(f, "element sum differs from identity (max entry residual {residual:.3e})")
            }
        }
    }
}

fn join_violations(violations: &[PovmViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("length mismatch in {context}: expected {expected} entries, got {found}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("POVM validation failed: {}", join_violations(.0))]
    InvalidPovm(Vec<PovmViolation>),

    #[error("matrix is not Hermitian (max entry deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("trace is {trace} instead of 1 (deviation {deviation:.3e})")]
    InvalidTrace { trace: f64, deviation: f64 },

    #[error("invalid probability vector: {reason}")]
    InvalidProbabilities { reason: String },

    #[error("weight vector is all zero")]
    ZeroWeight,

    #[error("operator lies outside the span of the POVM elements (residual {residual:.3e})")]
    OutsideSpan { residual: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON in {}: {message}", path.display())]
    Json { path: PathBuf, message: String },
}

impl TomoError {
    /// Violations behind an `InvalidPovm`, or an empty slice for other variants.
    pub fn povm_violations(&self) -> &[PovmViolation] {
        match self {
            Self::InvalidPovm(v) => v,
            _ => &[],
        }
    }
}
