//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Step-size rejected by the admissibility rule of the selected algorithm.
    #[error("step size gamma = {gamma} not admissible for {algorithm}: supremum is {bound} ({mode} mode)")]
    StepSizeOutOfRange {
        algorithm: &'static str,
        gamma: f64,
        bound: f64,
        mode: &'static str,
    },

    /// Failure inside an operator oracle, tagged with the iteration that hit it.
    #[error("operator failure at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("oracle did not converge: {0}")]
    OracleFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Error {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
