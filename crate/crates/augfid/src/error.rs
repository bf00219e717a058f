use thiserror::Error;

/// Failures of a command, split by exit status.
#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    /// Malformed input or arguments (exit status 2).
    #[error("{0}")]
    Parse(String),
    /// Well-formed input outside the domain of the computation (exit status 1).
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl From<augfid_core::Error> for CliError {
    fn from(e: augfid_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}
