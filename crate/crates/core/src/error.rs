use thiserror::Error;

/// Structural errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("coefficient {value} is not reduced modulo {modulus}")]
    NotReduced { value: u32, modulus: u32 },

    #[error("modulus {0} is not a power of two")]
    NotPowerOfTwo(u32),

    #[error("masking order must be at least 1, got {0}")]
    OrderTooSmall(usize),

    #[error("share count mismatch: {0} vs {1}")]
    ShareCountMismatch(usize, usize),

    #[error("share width mismatch: {0} vs {1}")]
    WidthMismatch(u8, u8),

    #[error("bit position {bit} outside register width {width}")]
    BitOutOfRange { bit: u8, width: u8 },

    #[error("share index {index} outside {count} shares")]
    ShareIndexOutOfRange { index: usize, count: usize },

    #[error("fault profile probabilities sum to {0}, expected 1.0")]
    ProfileWeights(f64),

    #[error("fault profile mixes kinds; a single kind is required here")]
    MixedFaultKinds,

    #[error("{0}")]
    Config(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
