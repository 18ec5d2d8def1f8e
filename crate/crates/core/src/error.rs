use thiserror::Error;

pub type Result<T, E = HaarError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HaarError {
    #[error("invalid dyadic interval (level {level}, offset {offset})")]
    InvalidInterval { level: u32, offset: u64 },
    #[error("operation needs a non-empty dyadic interval")]
    EmptyInterval,
    #[error("dyadic index must be at least 1")]
    ZeroIndex,
    #[error("resolution {resolution} too small, need at least {needed}")]
    ResolutionTooSmall { needed: u32, resolution: u32 },
    #[error("resolution {resolution} exceeds the cap {cap}")]
    ResolutionCap { resolution: u32, cap: u32 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("sign map has {got} entries, expected {expected}")]
    SignMapLength { expected: usize, got: usize },
    #[error("sign map entry {position} is {value}, expected ±1")]
    InvalidSign { position: usize, value: i8 },
    #[error("intervals {0} and {1} overlap")]
    Overlap(String, String),
    #[error("intervals have mixed levels")]
    MixedLevels,
    #[error("interval set is empty")]
    EmptySet,
    #[error("resolution mismatch: operator at {operator}, input at {input}")]
    ResolutionMismatch { operator: u32, input: u32 },
    #[error("dense operators are limited to resolution {cap}, got {resolution}")]
    DenseTooLarge { resolution: u32, cap: u32 },
    #[error("zero Haar diagonal entry at index {index}")]
    ZeroDiagonal { index: u64 },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("cannot parse {what}: {reason}")]
    Parse { what: String, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index {index} out of range (system has {len} entries)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for HaarError {
    fn from(e: std::io::Error) -> Self {
        HaarError::Io(e.to_string())
    }
}
