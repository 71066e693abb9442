use thiserror::Error;

/// Errors raised by the arithmetic, measure and integration layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("indeterminate division: divisor is zero to its precision O({prime}^{precision})")]
    IndeterminateDivision { prime: u64, precision: i64 },

    #[error("division by exact zero")]
    DivisionByZero,

    #[error("series outside its convergence domain: {0}")]
    ConvergenceDomain(String),

    #[error("operands live in different prime fields (p = {left} and p = {right})")]
    PrimeMismatch { left: u64, right: u64 },

    #[error("singular parameter: the factor {factor} vanishes")]
    Singular { factor: String },

    #[error("character value of order {order} cannot be realized in the {backend} backend")]
    UnsupportedCharacterValue { order: u64, backend: String },

    #[error("invalid character table: {0}")]
    InvalidCharacter(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("limit did not stabilize to {target} digits within {levels} levels (stable digits: {achieved})")]
    NotConverged { target: i64, achieved: i64, levels: u32 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(position: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: msg.into(),
        }
    }
}
