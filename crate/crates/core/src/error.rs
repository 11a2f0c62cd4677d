use std::path::PathBuf;

use thiserror::Error;

use crate::market::Side;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pool spec: {0}")]
    InvalidPool(String),

    #[error("grid rate at index {index} is non-positive ({rate})")]
    NonPositiveRate { index: i32, rate: f64 },

    #[error("rate ladder mismatch at index {index}: difference quotient {quotient} vs closed form {closed_form}")]
    LadderMismatch {
        index: i32,
        quotient: f64,
        closed_form: f64,
    },

    #[error("grid index {index} outside [-{halfwidth}, {halfwidth}]")]
    IndexOutOfRange { index: i32, halfwidth: usize },

    #[error("no {side} trade available at grid boundary index {index}")]
    AtBoundary { side: Side, index: i32 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("generator overflow for player {player} at row {row}: exponent {exponent}")]
    GeneratorOverflow {
        player: usize,
        row: i32,
        exponent: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("infeasible route: {0}")]
    InfeasibleRoute(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidPool(_)
                | Error::NonPositiveRate { .. }
                | Error::Config(_)
                | Error::Json { .. }
                | Error::InvalidInput(_)
        )
    }
}
