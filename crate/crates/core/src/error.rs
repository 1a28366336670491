use thiserror::Error;

/// Errors raised by the tree, simulation, estimation and ingest layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid degree sequence: {0}")]
    InvalidDegreeSequence(String),
    #[error("malformed Harris path: {0}")]
    MalformedPath(String),
    #[error("invalid Lukasiewicz walk: {0}")]
    InvalidWalk(String),
    #[error("invalid height process: {0}")]
    InvalidHeightProcess(String),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("rejection budget of {budget} rounds exceeded for n = {n}")]
    RejectionBudgetExceeded { n: usize, budget: u64 },
    #[error("empty sample")]
    EmptySample,
    #[error("empty forest")]
    EmptyForest,
    #[error("invalid quantile table: {0}")]
    InvalidTable(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("degenerate bias-corrector fit: {0}")]
    DegenerateFit(String),
    #[error("mask covers the whole path")]
    FullMask,
    #[error("unparseable document: {0}")]
    UnparseableDocument(String),
    #[error("no revisions in the requested range")]
    NoRevisions,
    #[error("network error: {0}")]
    NetworkError(String),
    #[error("rate limited, retry after {retry_after_secs} s")]
    RateLimited { retry_after_secs: u64 },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
