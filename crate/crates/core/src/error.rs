use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, IrisError>;

#[derive(Debug, Error)]
pub enum IrisError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt image: {0}")]
    CorruptImage(String),

    #[error("no dataset entries matched under {0}")]
    EmptyDataset(PathBuf),

    #[error("synthetic eye does not fit in {width}x{height}: {reason}")]
    SpecOutOfBounds {
        width: usize,
        height: usize,
        reason: String,
    },

    #[error("no boundary found: {0}")]
    NoBoundaryFound(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("too few rows: need at least {needed}, have {have}")]
    TooFewRows { needed: usize, have: usize },

    #[error("input too small: {0}")]
    TooSmall(String),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("unsupported direction count {0} (expected 2, 4 or 8)")]
    UnsupportedDirectionCount(usize),

    #[error("malformed pyramid: {0}")]
    MalformedPyramid(String),

    #[error("offset leaves no valid pixel pairs")]
    EmptyOverlap,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("no jointly valid bits between the two codes")]
    EmptyMask,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
