use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("unsupported QAOA depth {0}; fixed parameters exist for p = 1..=4")]
    UnsupportedDepth(usize),
    #[error("degenerate truncation cutoff {0}: every Schmidt coefficient would be discarded")]
    DegenerateCutoff(f64),
    #[error("degenerate range: worst and best values coincide at {0}")]
    DegenerateRange(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
