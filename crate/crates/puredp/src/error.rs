use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric or combinatorial parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A batch, attack, or record is malformed (wrong dimensions, out-of-range
    /// entries, indices past the user count).
    #[error("malformed input: {0}")]
    Structural(String),

    /// An exact computation was rejected because it would exceed the
    /// configured support-size guard. Guards reject; they never subsample.
    #[error("resource guard exceeded: {0}")]
    Resource(String),

    /// A verification suite ran to completion and found a violated claim.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
