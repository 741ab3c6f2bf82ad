use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("support functional not unique at a non-smooth point ({0})")]
    NotSmooth(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("not a contraction: {0}")]
    NotContraction(String),

    #[error("inconsistent: {0}")]
    Inconsistent(String),

    #[error("block index {index} outside window {lo}..={hi}")]
    OutOfWindow { index: i64, lo: i64, hi: i64 },

    #[error("rank-deficient basis: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("refused: {0}")]
    Refused(String),

    #[error("annotation does not reproduce the entries: {0}")]
    Annotation(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("empty near-maximizer set: {0}")]
    EmptyBand(String),

    #[error("io: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
