use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular (rank {rank} < {size})")]
    Singular { rank: usize, size: usize },

    #[error("generator matrix is rank deficient (rank {rank} < {rows} rows)")]
    RankDeficient { rank: usize, rows: usize },

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-finite input value at position {0}")]
    NonFinite(usize),

    #[error("phase mismatch: expected phase {expected}, got {got}")]
    PhaseMismatch { expected: usize, got: usize },

    #[error("problem too large for enumeration: {0}")]
    TooLarge(String),

    #[error("frozen position {0} carries a nonzero bit")]
    FrozenViolation(usize),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
