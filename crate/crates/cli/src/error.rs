use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, files or inputs; nothing was run.
    #[error("{0}")]
    Config(String),

    /// The model failed at run time.
    #[error("model error: {0}")]
    Model(effprob::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<effprob::Error> for CliError {
    fn from(e: effprob::Error) -> Self {
        if e.is_internal() {
            CliError::Internal(e.to_string())
        } else {
            CliError::Model(e)
        }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
