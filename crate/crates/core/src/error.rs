use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit codes:
/// `Infeasible` is an empty admissible set, `Invariant` a failed hard gate,
/// everything else a usage or input problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid axis: {0}")]
    InvalidAxis(String),

    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
