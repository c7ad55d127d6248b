use std::path::PathBuf;

use thiserror::Error;

use crate::gains::GainField;

pub type Result<T> = std::result::Result<T, Error>;

/// Every invariant a [`crate::SystemParams`] failed, in field order.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid parameters: {}", .violations.join("; "))]
pub struct ValidationError {
    pub violations: Vec<String>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("gain {0:?} is absent (its state class was never emitted)")]
    AbsentField(GainField),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("bracket [{lo}, {hi}] does not straddle the target {target}")]
    NoStraddle { lo: f64, hi: f64, target: f64 },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
