use thiserror::Error;

/// Errors produced by model construction, sampling and transform evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A malformed model description or experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The requested integral does not converge at the named endpoint.
    #[error("integral diverges at {endpoint}: {detail}")]
    NonIntegrable { endpoint: String, detail: String },

    /// The conditioning event has probability zero.
    #[error("conditioning event has zero probability: {0}")]
    ZeroProbability(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Closed-form evaluation is not available for the argument.
    #[error("outside closed-form range: {0}")]
    OutOfRange(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Config(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
