use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name} range: lower bound {lo} exceeds upper bound {hi}")]
    InvalidRange {
        name: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("grid dimensions must be at least 1x1 (got {rows}x{cols})")]
    EmptyGrid { rows: usize, cols: usize },

    #[error("grid shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid zone id {0:?}")]
    InvalidZoneId(String),

    #[error("invalid zone range {0:?}")]
    InvalidZoneRange(String),

    #[error("{what} must be positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },

    #[error("{what} must be non-negative (got {value})")]
    Negative { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "degenerate yield denominator: organic matter {organic_matter}% makes 1.2 - 0.14*OM <= 0"
    )]
    DegenerateDenominator { organic_matter: f64 },

    #[error("unknown builtin scenario {0:?} (expected 1, 2, 3 or identity)")]
    UnknownScenario(String),

    #[error("traversal is not a permutation of the grid's zones: {0}")]
    BadTraversal(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("malformed grid csv: {0}")]
    Csv(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
