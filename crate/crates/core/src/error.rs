use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precision of {digits} digits is below the minimum of 30")]
    PrecisionTooLow { digits: u32 },
    #[error("alpha out of (2/3,1): {0}")]
    AlphaOutOfRange(String),
    #[error("modulation b must be nonzero")]
    ZeroModulation,
    #[error("singular matrix at index {index}")]
    Singular { index: i64 },
    #[error("hyperbolic ansatz undefined (b*lambda must be positive)")]
    AnsatzUndefined,
    #[error("insufficient precision: {required} digits required, {available} available")]
    InsufficientPrecision { required: u32, available: u32 },
    #[error("starting index too small: {0}")]
    NZeroTooSmall(String),
    #[error("degenerate discriminant at index {index}")]
    DegenerateDiscriminant { index: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid system specification: {0}")]
    Spec(String),
    #[error("cannot parse scalar: {0}")]
    ParseScalar(String),
    #[error("json error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
