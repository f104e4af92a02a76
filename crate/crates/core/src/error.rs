use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or observation lies outside the set where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The data admit no estimate (e.g. an exponential sample with mean 0).
    #[error("degenerate data{}: {reason}", block.map(|b| format!(" in block {b}")).unwrap_or_default())]
    DegenerateData { block: Option<usize>, reason: String },

    /// Two datasets passed as a neighboring pair do not differ in exactly one position.
    #[error("datasets are not neighbors: {0}")]
    NotNeighbors(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
