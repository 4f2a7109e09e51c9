use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {actual}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("{what} must be at least 1")]
    ZeroCount { what: &'static str },

    #[error("invalid worker count {workers} for {neurons} neurons (need 1 <= workers <= neurons)")]
    InvalidWorkerCount { workers: usize, neurons: usize },

    #[error("partition plan covers {plan} neurons but the layer has {layer}")]
    PlanMismatch { plan: usize, layer: usize },

    #[error("failed to start worker pool: {0}")]
    WorkerSpawn(String),

    #[error("no samples to aggregate")]
    EmptySamples,

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("elapsed time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("amdahl argument out of range: {0}")]
    AmdahlDomain(String),

    #[error("speedup {ratio} outside [1, {workers}]: {kind}")]
    RatioOutOfBand {
        ratio: f64,
        workers: usize,
        kind: &'static str,
    },

    #[error("serial and parallel rows cover different operation counts: {0:?}")]
    OperationsMismatch(Vec<u64>),

    #[error("duplicate row for {0} operations")]
    DuplicateOperations(u64),

    #[error("need at least two distinct operation counts to fit a line, got {0}")]
    DegenerateFit(usize),

    #[error("nothing to emit")]
    EmptyTable,

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}
