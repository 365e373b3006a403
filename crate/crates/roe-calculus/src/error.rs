//! Structural error type shared by all modules.
//!
//! Structural errors are distinct from validation findings: a malformed
//! matrix is an error, a triangle-inequality violation is a report entry.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite entry in {what} at ({row}, {col})")]
    NonFiniteEntry {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("negative distance in {what} at ({row}, {col}): {value}")]
    NegativeEntry {
        what: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("duplicate point label {label:?}")]
    DuplicateLabel { label: String },

    #[error("unknown point label {label:?}")]
    UnknownLabel { label: String },

    #[error("space mismatch: {context}")]
    SpaceMismatch { context: String },

    #[error("middle space is empty: composition over an empty set is undefined")]
    EmptyMiddleSpace,

    #[error("partial map has empty support")]
    EmptySupport,

    #[error("composite map has empty support: no point of the first support lands in the second")]
    EmptyComposite,

    #[error("invalid parameter {what}: {message}")]
    InvalidParameter { what: &'static str, message: String },

    #[error("operator is not a width-1 band: {context}")]
    NotWidthOneBand { context: String },

    #[error("cannot resolve catalog reference {reference:?}: {message}")]
    BadReference { reference: String, message: String },

    #[error("schema error in {what}: {message}")]
    Schema { what: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
