use thiserror::Error;

use crate::bdiv::DegreeResult;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero vector has no primitive representative")]
    ZeroVector,
    #[error("vector {0} is not in the open positive quadrant or is a basis vector")]
    NotInterior(String),
    #[error("cone {0} is not a cone of the fan")]
    ConeNotInFan(String),
    #[error("cone {0} is not smooth")]
    NotSmooth(String),
    #[error("unsupported ambient dimension {0}")]
    UnsupportedDimension(usize),
    #[error("polyhedron is unbounded")]
    Unbounded,
    #[error("polyhedron is empty")]
    EmptyPolytope,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("function cannot be evaluated exactly: {0}")]
    EvaluationNotExact(String),
    #[error("fan is not a refinement of the target fan: {0}")]
    NotARefinement(String),
    #[error("degree computation did not converge below tolerance (last bracket width {:.3e})", .0.bracket_width_f64)]
    NotConverged(Box<DegreeResult>),
    #[error("operation requires a two-dimensional fan, found dimension {0}")]
    NotDimensionTwo(usize),
    #[error("could not bound local variation of the function near {0}")]
    NoLipschitzBound(String),
    #[error("shift {0} needed to trivialize the divisor is not integral")]
    NoIntegralShift(String),
    #[error("b-divisor is not big")]
    NotBig,
    #[error("divisor is not big and nef on the given fan")]
    NotBigNef,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("function is not conical: {0}")]
    NotConical(String),
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
