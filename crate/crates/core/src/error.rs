use thiserror::Error;

/// Errors raised by problem construction, the SGD engine and the analyzer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is invalid. `key` names the offending field.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// A hypothesis constant or the minimizer could not be certified.
    #[error("certification failed: {0}")]
    Certification(String),

    /// An SGD update produced a non-finite value.
    #[error("iterate became non-finite")]
    NonFinite,

    /// A replication diverged; `step` is the index of the first non-finite iterate.
    #[error("trajectory diverged at step {step}")]
    Divergence { step: usize },

    /// An operation was called outside its precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// A numeric argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
