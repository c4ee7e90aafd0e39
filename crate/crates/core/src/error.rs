use thiserror::Error;

/// Errors raised by the solver and its building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical method itself (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateMesh(_)
                | Error::Singular(_)
                | Error::InvalidState(_)
                | Error::Domain(_)
        )
    }

    /// Same kind of error with `prefix: ` in front of the message.
    pub fn context(self, prefix: impl std::fmt::Display) -> Error {
        let wrap = |m: String| format!("{prefix}: {m}");
        match self {
            Error::InvalidArgument(m) => Error::InvalidArgument(wrap(m)),
            Error::DegenerateMesh(m) => Error::DegenerateMesh(wrap(m)),
            Error::InvalidCoefficient(m) => Error::InvalidCoefficient(wrap(m)),
            Error::Singular(m) => Error::Singular(wrap(m)),
            Error::InvalidState(m) => Error::InvalidState(wrap(m)),
            Error::Domain(m) => Error::Domain(wrap(m)),
            Error::Io(m) => Error::Io(wrap(m)),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
