use thiserror::Error;

/// Errors raised by the core library.
///
/// Every variant corresponds to a violated contract; callers that need a
/// stable tag for logs can use [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} values for the grid, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value {value} at cell {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("grid must contain at least one cell")]
    EmptyGrid,

    #[error("integer-line grids require k_min = 0, got {0}")]
    IntegerGridLevel(i32),

    #[error("interval endpoints out of order: [{lo}, {hi})")]
    ReversedInterval { lo: f64, hi: f64 },

    #[error("interval [{lo}, {hi}) does not have dyadic length")]
    NotDyadicLength { lo: f64, hi: f64 },

    #[error("empty scale range [{lo}, {hi}]")]
    EmptyRange { lo: i32, hi: i32 },

    #[error("scale {k} is below the grid level {k_min}")]
    BelowGrid { k: i32, k_min: i32 },

    #[error("scale span {span} above the grid level exceeds the supported maximum {max}")]
    SpanTooLarge { span: i32, max: i32 },

    #[error("offset {offset} outside [0, {len}] at scale {k}")]
    OffsetOutOfRange { k: i32, offset: f64, len: f64 },

    #[error("integer-line offsets must be integers, got {offset} at scale {k}")]
    FractionalOffset { k: i32, offset: f64 },

    #[error("selector table does not cover scale {k} at x = {x}")]
    Uncovered { k: i32, x: f64 },

    #[error("exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("enlarged interval [{lo}, {hi}) leaves the signal window")]
    EnlargedOutsideWindow { lo: f64, hi: f64 },

    #[error("interval of level {k} is finer than the grid level {k_min}")]
    IntervalBelowGrid { k: i32, k_min: i32 },

    #[error("invalid construction parameters: {0}")]
    Construction(String),

    #[error("realized selector deviates from target by {deviation} at x = {x}")]
    VerificationMismatch { x: f64, deviation: f64 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag for the error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::NonFinite { .. } => "non-finite",
            Error::EmptyGrid => "empty-grid",
            Error::IntegerGridLevel(_) => "integer-grid-level",
            Error::ReversedInterval { .. } => "reversed-interval",
            Error::NotDyadicLength { .. } => "not-dyadic-length",
            Error::EmptyRange { .. } => "empty-range",
            Error::BelowGrid { .. } => "below-grid",
            Error::SpanTooLarge { .. } => "span-too-large",
            Error::OffsetOutOfRange { .. } => "offset-out-of-range",
            Error::FractionalOffset { .. } => "fractional-offset",
            Error::Uncovered { .. } => "uncovered",
            Error::InvalidExponent(_) => "invalid-exponent",
            Error::EnlargedOutsideWindow { .. } => "enlarged-outside-window",
            Error::IntervalBelowGrid { .. } => "interval-below-grid",
            Error::Construction(_) => "construction",
            Error::VerificationMismatch { .. } => "verification-mismatch",
            Error::Parse(_) => "parse",
            Error::Json(_) => "json",
            Error::Io(_) | Error::File { .. } => "io",
        }
    }
}

/// Attaches `path` to an I/O error.
pub(crate) fn at_path(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

pub type Result<T> = std::result::Result<T, Error>;
