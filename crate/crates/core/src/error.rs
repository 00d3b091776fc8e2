use thiserror::Error;

/// Errors raised by model construction and the numerical routines.
///
/// The variants line up with the CLI exit-status classes: `Parse` for
/// unreadable model files, `Config` for unsupported or invalid parameter
/// combinations, `Domain`/`Dimension` for misuse of an operation, and
/// `Scale` when a brute-force oracle is asked to run beyond its size limit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("oracle limited to n <= {limit} states, got {n}")]
    Scale { n: usize, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid model: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
