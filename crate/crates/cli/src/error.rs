use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable inputs or inconsistent settings.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] jobshop_core::Error),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    /// Corpus mode could not prove enough instances within the budget.
    #[error("only {solved} of {requested} instances proven optimal within the time cap")]
    BudgetExhausted { solved: usize, requested: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BudgetExhausted { .. } => 3,
            CliError::Io { .. } => 1,
            CliError::Core(jobshop_core::Error::Io(_)) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}
