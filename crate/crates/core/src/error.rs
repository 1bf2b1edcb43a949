//! Error type shared across the library.

use thiserror::Error;

/// Errors raised by metric computation, data handling, model training and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input vectors have mismatched lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("no positives in evaluation set; intervention efficiency is undefined")]
    NoPositives,

    #[error("intervention capacity must lie in (0, 1], got {0}")]
    InvalidCapacity(f64),

    #[error("infeasible population spec: {0}")]
    InfeasibleSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("minority class is empty; nothing to oversample")]
    EmptyMinority,

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no complete-case rows available to seed imputation")]
    NoCompleteCases,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input (flags, configs, infeasible
    /// requests) as opposed to runtime failures. The CLI maps the former to
    /// exit code 1 and the latter to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Csv(_) | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
