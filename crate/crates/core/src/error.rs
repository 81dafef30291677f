use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates a documented constraint. The message names it.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state {x} outside the model interval {interval}")]
    OutsideInterval { x: f64, interval: String },

    #[error("non-finite iterate at step {step} (last finite value {last})")]
    NonFinite { step: u64, last: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{0} has no closed form for this model")]
    NoClosedForm(&'static str),

    #[error("series truncation did not converge: tail weight {tail:e} exceeds {bound:e}")]
    Truncation { tail: f64, bound: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
