//! CLI error split matching the exit-code contract: configuration problems
//! exit with 2, numerical/runtime failures with 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl From<bayes_siac::Error> for CliError {
    fn from(err: bayes_siac::Error) -> Self {
        use bayes_siac::Error::*;
        match err {
            InvalidArgument(m) | UnsupportedConfiguration(m) | InvalidInput(m) => {
                CliError::Config(m)
            }
            DimensionMismatch(m) | Solver(m) | Numerical(m) => CliError::Runtime(m),
            Io(e) => CliError::Runtime(format!("io error: {e}")),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
