use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates an operation's precondition (shape, range).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// The input lies outside the domain of the operation (empty pattern,
    /// missing origin, too few neighbours).
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration value cannot be honoured (window too large,
    /// block side exceeding the window).
    #[error("configuration error: {0}")]
    Config(String),
    /// Observed data violate the assumptions of a statistical test.
    #[error("data error: {0}")]
    Data(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
