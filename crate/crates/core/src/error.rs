use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the embed / extract / retrieval pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("image is {width}x{height}, at least {min}x{min} required")]
    ImageTooSmall { width: usize, height: usize, min: usize },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("record field is {len} bytes, limit is 65535")]
    FieldTooLong { len: usize },

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("capacity exceeded: need {needed} bits, {available} available")]
    CapacityExceeded { needed: usize, available: usize },

    #[error("no payload present")]
    NoPayload,

    #[error("payload header corrupt")]
    HeaderCorrupt,

    #[error("integrity check failed (wrong key or tampered image)")]
    IntegrityFailure,

    #[error("bit count {0} is odd; pairwise embedding needs an even count")]
    OddBitCount(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("line {line}: cycle through concept '{concept}'")]
    CycleDetected { line: usize, concept: String },

    #[error("line {line}: synonym '{token}' already used")]
    DuplicateSynonym { line: usize, token: String },

    #[error("query has no terms")]
    EmptyQuery,

    #[error("class '{0}' has no images")]
    EmptyClass(String),

    #[error("centroid table is empty")]
    NoCentroids,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
