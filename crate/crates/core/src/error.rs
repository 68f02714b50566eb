//! Crate-wide error type.

use std::path::PathBuf;

/// Everything that can go wrong between reading audio and writing a report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed audio container: {0}")]
    Format(String),
    #[error("unsupported audio encoding: {0}")]
    UnsupportedCodec(String),
    #[error("audio payload is empty")]
    EmptyAudio,
    #[error("label error: {0}")]
    Label(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("cannot stratify: {0}")]
    Stratification(String),
    #[error("kappa is undefined: every rating falls in a single category")]
    UndefinedKappa,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("geometry error at layer `{layer}`: {detail}")]
    Geometry { layer: String, detail: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("training failure: {0}")]
    Training(String),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    /// An error replayed from a stored record, message kept verbatim.
    #[error("{message}")]
    Recorded { class: ErrorClass, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse failure classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Training,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Argument(_) | Error::Config(_) | Error::Geometry { .. } => ErrorClass::Config,
            Error::Shape(_) | Error::Training(_) => ErrorClass::Training,
            Error::Format(_)
            | Error::UnsupportedCodec(_)
            | Error::EmptyAudio
            | Error::Label(_)
            | Error::Stratification(_)
            | Error::UndefinedKappa
            | Error::Data(_)
            | Error::MissingFile(_)
            | Error::Io(_) => ErrorClass::Data,
            Error::Recorded { class, .. } => *class,
        }
    }

    /// Process exit status: 2 config, 3 data, 4 training.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Training => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
