//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(String),

    #[error("parse error at data row {row}, column {col}: {detail}")]
    Parse {
        row: usize,
        col: usize,
        detail: String,
    },

    #[error("dataset is empty after cleaning")]
    EmptyDataset,

    #[error("label column not found: {0}")]
    LabelColumnMissing(String),

    #[error("duplicate column name: {0}")]
    DuplicateColumn(String),

    #[error("invalid bin count {bins}: {detail}")]
    InvalidBins { bins: usize, detail: String },

    #[error("invalid train fraction {0}: must lie in (0, 1]")]
    InvalidFraction(f64),

    #[error("dataset has {0} rows, need at least 2 to split")]
    TooFewRows(usize),

    #[error("column length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("joint encoding needs at least one column")]
    NoColumns,

    #[error("elite set is empty")]
    EmptyElite,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid k = {k}: must lie in [1, {m}]")]
    InvalidK { k: usize, m: usize },

    #[error("mask selects no features")]
    EmptyMask,

    #[error("training split has fewer than 2 classes")]
    TooFewClasses,

    #[error("pooled covariance matrix is singular; metric not evaluable")]
    SingularCovariance,

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
