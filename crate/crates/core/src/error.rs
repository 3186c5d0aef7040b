//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A column named in the schema is missing, or model/data feature
    /// names do not line up.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell could not be parsed as a finite number.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Input violates a dataset contract (event values outside {0,1},
    /// no events at all, dimension mismatches, bad hyperparameters).
    #[error("validation error: {0}")]
    Validation(String),

    /// A computation produced a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Zero curvature with a nonzero gradient: no finite minimizer.
    #[error("degenerate curvature for feature step: {0}")]
    DegenerateCurvature(String),

    /// A metric is undefined on the given input (e.g. no comparable pairs).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
