use std::fmt::Display;

/// A failed invocation. Usage errors exit with 1, stage failures with 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Stage { .. } => 2,
        }
    }
}

/// Wrap any error as a failure of `stage`.
pub fn at<E: Display>(stage: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Stage {
        stage,
        message: e.to_string(),
    }
}
