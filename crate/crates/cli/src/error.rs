use std::fmt;

/// Exit status: 0 success, 1 bad input, 2 failed criterion.
#[derive(Debug)]
pub enum CliError {
    Config { key: String, reason: String },
    Model(rill_core::Error),
    Io(std::io::Error),
    Criteria(Vec<String>),
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Criteria(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { key, reason } => write!(f, "invalid `{key}`: {reason}"),
            CliError::Model(rill_core::Error::Config { key, reason }) => write!(f, "invalid `{key}`: {reason}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Criteria(failed) => write!(f, "failed criteria: {}", failed.join(", ")),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rill_core::Error> for CliError {
    fn from(e: rill_core::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
