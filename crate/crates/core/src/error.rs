use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("set has zero measure")]
    DegenerateSet,

    /// A requested enumeration would not be complete under the given bound.
    #[error("incomplete enumeration: {0}")]
    IncompleteEnumeration(String),

    /// Some input escapes the declared finite domain.
    #[error("incomplete domain: {0}")]
    IncompleteDomain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
