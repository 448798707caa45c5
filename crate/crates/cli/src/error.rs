//! Error-to-exit-code mapping: flag and input mistakes exit 2, numerical
//! failures during a run exit 3. "No crossing found" is a regular result
//! and exits 0.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Numerical(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

/// Shorthand for flag and config mistakes.
pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<dcesim_core::Error> for CliError {
    fn from(e: dcesim_core::Error) -> Self {
        use dcesim_core::Error;
        // Failures of the computation itself, as opposed to inputs the
        // core rejected up front.
        let numerical = matches!(
            &e,
            Error::Truncation { .. }
                | Error::EigenFailed { .. }
                | Error::NotHermitian { .. }
                | Error::NotNormalized { .. }
                | Error::UndefinedConditional { .. }
        );
        if numerical {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}
