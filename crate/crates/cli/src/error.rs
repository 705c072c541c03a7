use thiserror::Error;

/// Failures of a CLI run, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Schema(String),

    #[error("gain gate failed: {0}")]
    Gate(String),

    #[error("numerical failure: {0}")]
    NonFinite(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Gate(_) => 3,
            CliError::NonFinite(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<ambient_attitude::Error> for CliError {
    fn from(e: ambient_attitude::Error) -> Self {
        use ambient_attitude::Error as E;
        match e {
            E::GainGate { .. } => CliError::Gate(e.to_string()),
            E::NonFinite { .. } | E::EigenNotConverged => CliError::NonFinite(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
