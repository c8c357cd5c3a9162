use std::fmt;
use std::process::ExitCode;

use kaplan_core::Error;

/// A failed command, split by who is to blame.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable inputs or an invalid configuration (exit code 2).
    Usage(String),
    /// The run itself failed: backend errors, write failures (exit code 3).
    Runtime(String),
}

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        Self::Usage(message.to_string())
    }

    pub fn runtime(message: impl fmt::Display) -> Self {
        Self::Runtime(message.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Usage(_) => ExitCode::from(2),
            Self::Runtime(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

/// Argument and configuration problems are usage errors; everything else failed at run time.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyInput
            | Error::InvalidArgument(_)
            | Error::InvalidConfig(_)
            | Error::TooFewPoints { .. }
            | Error::Parse { .. } => Self::usage(e),
            _ => Self::runtime(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
