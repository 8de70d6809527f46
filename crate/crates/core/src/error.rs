use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories shared by every stage of the engine.
///
/// The CLI maps each variant onto a distinct exit status, so new variants
/// should be added with a matching [`Error::category`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no profile: {0}")]
    NoProfile(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format mismatch: expected {expected}, found {found}")]
    Format { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Contract(_) => "contract",
            Error::NoProfile(_) => "no-profile",
            Error::Evaluation(_) => "evaluation",
            Error::Parse { .. } => "parse",
            Error::Format { .. } => "format",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
