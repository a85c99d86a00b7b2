use qbm_core::QbmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config field `{path}`: {message}")]
    Field { path: String, message: String },

    #[error("i/o: {0}")]
    Io(String),

    #[error(transparent)]
    Solver(#[from] QbmError),
}

impl CliError {
    /// Process exit code: 2 config (including a grid too small for the
    /// requested states), 3 numerical breakdown, 4 cost guard.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Field { .. } => 2,
            CliError::Io(_) => 1,
            CliError::Solver(e) => match e {
                QbmError::CostGuard { .. } | QbmError::MemoryBudget { .. } => 4,
                QbmError::InvalidParameter(_)
                | QbmError::ConstraintViolation(_)
                | QbmError::Geometry(_)
                | QbmError::Aliasing(_)
                | QbmError::BelowQuantumScale { .. } => 2,
                _ => 3,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
