use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("duplicate entry ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },

    #[error("no observed entries")]
    NoObservedEntries,

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("observed density must be positive, got {0}")]
    InvalidDensity(f64),

    #[error("numerical failure in row {row}")]
    NumericalFailure { row: usize },

    #[error("design matrix too large: {elements} elements exceeds cap of {cap}")]
    TooLarge { elements: usize, cap: usize },

    #[error("every grid point failed")]
    AllGridPointsFailed,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
