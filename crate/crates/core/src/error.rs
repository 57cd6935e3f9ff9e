use thiserror::Error;

#[derive(Debug, Error)]
pub enum OckError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {message} ({diagnostics})")]
    Numerical { message: String, diagnostics: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OckError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(OckError::InvalidArgument(msg.into()))
}
