use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid acceleration profile: {0}")]
    InvalidProfile(String),

    #[error("stationary system is singular beyond regularization")]
    SingularSystem,

    #[error("gradient iteration diverged at iteration {iteration} (objective not finite)")]
    Divergence { iteration: usize },

    #[error("parse error{}: field `{field}`: {message}", frame.map(|f| format!(" in frame {f}")).unwrap_or_default())]
    Parse {
        frame: Option<usize>,
        field: String,
        message: String,
    },

    #[error("sweep has {required} grid points, above the cap of {cap}")]
    SweepCap { required: usize, cap: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(frame: Option<usize>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            frame,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
