use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("truncation mismatch: order {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("malformed shape: {0}")]
    Shape(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("constant term is not invertible over the coefficient ring")]
    NotInvertible,

    #[error("element is not congruent to the identity modulo T")]
    NotUnipotent,

    #[error("filtration level {level} is below the requested degree {degree}")]
    LevelTooSmall { level: usize, degree: usize },

    #[error("exponent must be nonzero")]
    ZeroExponent,

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("lie algebra has no weight grading attached")]
    MissingWeights,

    #[error(
        "negative multiplicity for weight {weight:?} while peeling highest weight {highest:?}"
    )]
    NotACharacter { weight: Vec<i64>, highest: Vec<u32> },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
