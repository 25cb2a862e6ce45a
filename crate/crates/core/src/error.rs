use thiserror::Error;

/// Errors produced anywhere in the learning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("sampling starved: {attempts} draws produced only {accepted} of {requested} points in band of width {width}")]
    SamplingStarvation {
        width: f64,
        attempts: u64,
        accepted: usize,
        requested: usize,
    },

    #[error("epoch {epoch}: hard-thresholded solution was zero twice in a row")]
    ZeroAfterThreshold { epoch: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
