use thiserror::Error;

/// Failures of a `posefuse` run, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad manifest, flags or input data.
    #[error("{0}")]
    Validation(String),

    /// I/O or numerical failure while processing valid input.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub(crate) fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{ctx}: {m}")),
            CliError::Runtime(m) => CliError::Runtime(format!("{ctx}: {m}")),
        }
    }
}
