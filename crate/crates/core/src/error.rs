use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The arguments violate a precondition (malformed shape, size mismatch, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An enumeration would exceed its configured bound and was refused.
    #[error("resource limit exceeded in {operation}: estimate {estimate} > limit {limit}")]
    ResourceLimit {
        operation: String,
        estimate: u128,
        limit: u128,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn limit(operation: impl Into<String>, estimate: u128, limit: u128) -> Self {
        Error::ResourceLimit {
            operation: operation.into(),
            estimate,
            limit,
        }
    }

    /// Stable machine-readable reason tag.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::ResourceLimit { .. } => "resource_limit",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
