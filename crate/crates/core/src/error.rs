use thiserror::Error;

/// Errors raised by the factorisation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix has no observed entries")]
    NoObservations,

    #[error("observed entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("observed entry ({row}, {col}) = {value} is negative; multiplicative updates need non-negative data")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("split leaves the {0} set empty")]
    EmptySplit(&'static str),

    #[error("gamma mode undefined for shape {0} < 1")]
    GammaModeUndefined(f64),

    #[error("no retained posterior draws to average")]
    NoDraws,

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {col}: cannot parse {text:?} as a number")]
    Parse {
        line: usize,
        col: usize,
        text: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
