use thiserror::Error;

/// Errors raised by model construction, decoding and statistics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chain dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u8, u8),
    #[error("vertex {vertex} out of range for graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("invalid code distance {0}: must be odd and at least 1")]
    InvalidDistance(i64),
    #[error("operator anticommutes with plaquette {0}")]
    NonTrivialSyndrome(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model violates (C1): edge {edge} has rank {rank}")]
    RankViolation { edge: usize, rank: usize },
    #[error("model violates (C2): edge {edge} has probability {prob}")]
    ProbabilityViolation { edge: usize, prob: f64 },
    #[error("numerical integration did not converge (estimated error {0:e})")]
    Quadrature(f64),
    #[error("decoder failure: {0}")]
    Decoder(String),
    #[error("threshold fit failed: {0}")]
    Fit(String),
    #[error("curves do not cross in the scanned range")]
    NoCrossing,
}

pub type Result<T> = std::result::Result<T, Error>;
