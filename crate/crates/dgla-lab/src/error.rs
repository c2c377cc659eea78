use thiserror::Error;

/// Errors surfaced by the library and the fixture loader.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("duplicate name `{0}`")]
    DuplicateName(String),

    #[error("{0}")]
    Invalid(String),

    #[error("axiom check failed for `{object}`: {detail}")]
    CheckFailed { object: String, detail: String },

    #[error("coefficient algebra mismatch")]
    ArtinMismatch,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn check(object: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::CheckFailed { object: object.into(), detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
