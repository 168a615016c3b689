use std::path::PathBuf;

/// Errors raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal has zero variance and cannot be normalized")]
    ZeroVariance,

    #[error("target has zero norm; relative error is undefined")]
    ZeroNorm,

    #[error(
        "non-finite {quantity} at iteration {iteration} (parameter norm {param_norm:.6e}, index {index:?})"
    )]
    NonFinite {
        quantity: &'static str,
        iteration: usize,
        param_norm: f64,
        index: Option<usize>,
    },

    #[error("exhaustive search refused: n = {n} exceeds the limit of {limit}; reduce the problem or k_max")]
    TooLarge { n: usize, limit: usize },

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("format error in {}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("range error: {0}")]
    Range(String),

    #[error("no valid sweep points")]
    NoValidPoints,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
