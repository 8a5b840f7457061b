use thiserror::Error;

/// Error type shared by every fallible operation in this crate.
///
/// Variants are grouped by contract kind rather than by module: a caller that
/// passed mismatched shapes gets `Dimension` no matter which kernel noticed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Non-finite values where finite ones are required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Input outside the operation's domain (empty batch, bad rate, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Objects that are individually valid but inconsistent with each other,
    /// e.g. a forward trace replayed against a different model.
    #[error("state error: {0}")]
    State(String),

    /// ROC/PR asked for on records with only one outcome class.
    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Parse failure with file position context.
    #[error("{path}: row {row}: {msg}")]
    Parse { path: String, row: usize, msg: String },

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, row: usize, msg: impl Into<String>) -> Self {
        Error::Parse { path: path.as_ref().display().to_string(), row, msg: msg.into() }
    }
}
