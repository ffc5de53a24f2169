use thiserror::Error;

/// Errors produced by the multiport library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("size limit exceeded: {what} is {value}, maximum is {limit}")]
    SizeLimit {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("mode label {label} out of range 1..={max}")]
    Index { label: usize, max: usize },

    /// First-row or first-column entry too small to fix its phase. Labels are 1-based.
    #[error("gauge anchor ({row}, {col}) has magnitude {magnitude:e}, below 1e-12")]
    GaugeAnchor { row: usize, col: usize, magnitude: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("fit failed after {iterations} iterations (best residual rms {best_rms})")]
    FitFailure { iterations: usize, best_rms: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}
