use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model quantity left its admissible domain during evaluation.
    #[error("domain error{}: {message}", .time.map(|t| format!(" at t={t}")).unwrap_or_default())]
    Domain { message: String, time: Option<f64> },

    #[error("config line {line} [{section}]: {message}")]
    Config {
        line: usize,
        section: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain {
            message: message.into(),
            time: None,
        }
    }

    pub(crate) fn input(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// Attaches a simulation time to a domain error; other variants pass through.
    pub fn at_time(self, t: f64) -> Self {
        match self {
            Error::Domain {
                message,
                time: None,
            } => Error::Domain {
                message,
                time: Some(t),
            },
            other => other,
        }
    }

    /// True for errors caused by bad user input (as opposed to runtime failures).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidTable(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidInput(_)
                | Error::Config { .. }
        )
    }
}
