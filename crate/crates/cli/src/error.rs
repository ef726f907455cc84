use std::io;
use std::process::ExitCode;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    Missing(String),
    #[error(transparent)]
    Core(#[from] lsit::Error),
}

impl CliError {
    /// 0 success, 2 config validation, 3 missing artifact, 4 numeric failure,
    /// 1 anything else.
    pub fn exit_code(&self) -> ExitCode {
        use lsit::Error as E;
        let code = match self {
            CliError::Config(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Core(e) => match e {
                E::Parameter(_) | E::Dimension(_) | E::Capacity { .. } => 2,
                E::Io(io) if io.kind() == io::ErrorKind::NotFound => 3,
                E::Numeric(_) | E::UndefinedReference | E::DegenerateCurve(_) => 4,
                _ => 1,
            },
        };
        ExitCode::from(code)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
