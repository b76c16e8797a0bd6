use shifterr_core::Error;
use std::fmt;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration or input data. Exit code 2.
    Config(String),
    /// A fit or estimator failed on valid input. Exit code 3.
    Numerical { at: String, source: Error },
    /// Reading or writing files failed. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Sorts a library error into a configuration or numerical failure;
    /// `at` names where it happened.
    pub fn from_core(source: Error, at: impl Into<String>) -> Self {
        let at = at.into();
        match source {
            Error::InvalidInput(_)
            | Error::ShapeMismatch(_)
            | Error::IncompatibleLoss { .. }
            | Error::MissingColumn(_)
            | Error::NonNumericFeature(_)
            | Error::ParseError { .. }
            | Error::MissingGroups
            | Error::TooFewGroups { .. } => CliError::Config(format!("{at}: {source}")),
            Error::Io(msg) => CliError::Io(format!("{at}: {msg}")),
            source => CliError::Numerical { at, source },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical { at, source } => write!(f, "numerical failure in {at}: {source}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
