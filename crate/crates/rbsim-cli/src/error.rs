//! CLI error taxonomy mapped to exit codes: 1 for invalid configuration,
//! 2 for calibration or fit failures, 3 for I/O failures.

use rbsim::Error as LibError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
    Io(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Compute(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Compute(m) | CliError::Io(m) => m,
        }
    }

    /// Library errors raised while computing: calibration and fit failures
    /// keep exit code 2; anything else is a configuration problem.
    pub fn from_compute(e: LibError) -> Self {
        match e {
            LibError::CalibrationFailure { .. } | LibError::FitFailure { .. } => {
                CliError::Compute(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}
