use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for p = {p}")]
    VertexOutOfRange { vertex: usize, p: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("coupling must be nonnegative, got {0}")]
    NegativeCoupling(f64),

    #[error("connected component of {size} vertices exceeds enumeration cap {cap}")]
    ComponentOverCap { size: usize, cap: usize },

    #[error("models disagree on {what}: {left} vs {right}")]
    ModelMismatch {
        what: &'static str,
        left: String,
        right: String,
    },

    #[error("dimension mismatch: expected p = {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("work limit exceeded: {0}")]
    ResourceCap(String),

    #[error("member indexing unavailable: {0}")]
    IndexingUnavailable(String),

    #[error("decoder {decoder} does not support family {family}")]
    DecoderFamilyMismatch {
        decoder: &'static str,
        family: &'static str,
    },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for a named constraint violation.
    pub fn constraint(msg: impl Into<String>) -> Self {
        Error::Constraint(msg.into())
    }
}
