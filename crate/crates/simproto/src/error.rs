//! Error types shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by statistics, prototype, loss, training, and I/O code.
#[derive(Error, Debug)]
pub enum Error {
    /// A label map pixel lies outside the declared label range `[1, L]`.
    #[error("label {label} at pixel ({x}, {y}) is outside the valid range [1, {max_label}]")]
    LabelOutOfRange {
        x: usize,
        y: usize,
        label: u32,
        max_label: usize,
    },

    /// A class has no instances to aggregate.
    #[error("class {class:?} has no instances")]
    EmptyClass { class: String },

    /// Two vectors or matrices that must agree in size do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    /// A class representation has zero norm and cannot be correlated.
    #[error("class {class:?} has a degenerate (zero-norm) semantic representation")]
    DegenerateRepresentation { class: String },

    /// A matrix row has zero sum and cannot be normalized.
    #[error("row {row} has zero sum and cannot be normalized")]
    DegenerateRow { row: usize },

    /// A similarity matrix that must be symmetric is not.
    #[error("matrix is not symmetric: |S[{i}][{j}] - S[{j}][{i}]| = {delta:e} exceeds 1e-12")]
    AsymmetricMatrix { i: usize, j: usize, delta: f64 },

    /// A target-confidence value is outside the open interval (0, 1).
    #[error("confidence {value} is outside the open interval (0, 1)")]
    InvalidConfidence { value: f64 },

    /// An epoch index below 1 was requested.
    #[error("epoch {epoch} is invalid; epochs are 1-based")]
    InvalidEpoch { epoch: i64 },

    /// A computation produced or received a non-finite value.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// A dataset file could not be read or parsed.
    #[error("failed to ingest {path:?}: {reason}")]
    Ingestion { path: PathBuf, reason: String },

    /// Map geometry cannot be tiled into the requested regions.
    #[error("{width}x{height} map cannot be split into {regions} equal contiguous regions")]
    Geometry {
        width: usize,
        height: usize,
        regions: usize,
    },

    /// A generator profile specification cannot be satisfied.
    #[error("infeasible profile spec: {reason}")]
    InfeasibleSpec { reason: String },

    /// A dataset or split contains no samples.
    #[error("{what} is empty")]
    EmptyData { what: String },

    /// The model lacks the structure an operation requires.
    #[error("unsupported model: {reason}")]
    UnsupportedModel { reason: String },

    /// A configuration value is invalid.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    /// Underlying I/O failure with the file it concerns.
    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn ingestion(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Ingestion {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
