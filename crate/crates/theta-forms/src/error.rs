use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Incompatible matrix/vector dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An enumeration or evaluation would exceed a hard size limit.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// A parity precondition (even/odd characteristic) was violated.
    #[error("parity error: {0}")]
    Parity(String),

    /// Argument outside the operation's domain (wrong subgroup, equal
    /// characteristics, repeated entries, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix that must be inverted is numerically too close to singular.
    #[error("ill-conditioned matrix: {0}")]
    Conditioning(String),

    /// The summation radius needed to certify the requested tolerance
    /// exceeds the hard cap.
    #[error("truncation infeasible: {0}")]
    TruncationInfeasible(String),

    /// A search exceeded its node budget. Carries the nodes explored so far.
    #[error("node budget exceeded after {nodes} nodes")]
    Budget { nodes: u64 },

    /// Malformed input data (bad period-matrix file, invalid bits, ...).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
