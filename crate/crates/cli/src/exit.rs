use std::fmt;

use flyer_sdnn::Error;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_NON_RELU: i32 = 4;
pub const EXIT_CHECKSUM: i32 = 5;
pub const EXIT_INCOMPATIBLE: i32 = 6;

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(EXIT_INVALID_INPUT, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::UnsupportedVersion { .. } | Error::DimensionMismatch { .. } => {
            EXIT_INVALID_INPUT
        }
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Conversion(_) => EXIT_NON_RELU,
        Error::Checksum(_) => EXIT_CHECKSUM,
        Error::Incompatible(_) => EXIT_INCOMPATIBLE,
        Error::NonFinite(_) | Error::Integrity(_) | Error::CacheMismatch => EXIT_FAILURE,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

/// Attaches the offending path to I/O and parse failures.
pub trait WithPath<T> {
    fn at(self, path: &std::path::Path) -> Result<T, CliError>;
}

impl<T> WithPath<T> for Result<T, Error> {
    fn at(self, path: &std::path::Path) -> Result<T, CliError> {
        self.map_err(|e| {
            let code = exit_code(&e);
            CliError::new(code, format!("{}: {e}", path.display()))
        })
    }
}
