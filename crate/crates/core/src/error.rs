use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{field}` out of range: {reason}")]
    Range { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("cannot cap {k} weights at 1/{m} while keeping unit mass")]
    Infeasible { k: usize, m: usize },

    #[error("dynamic modifier evaluated to {value}, outside (0, 1]")]
    ModifierRange { value: f64 },

    #[error("{what} = {size} exceeds the enumeration limit {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("observed graph has probability zero: {0}")]
    ImpossibleObservation(String),

    #[error("operation not supported for {0}")]
    UnsupportedSpec(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn range(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Range {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures caused by the filesystem rather than by bad input.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
