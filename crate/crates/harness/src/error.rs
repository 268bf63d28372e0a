use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(#[from] qgyro_core::Error),

    #[error("{count} point(s) failed; first: {first}")]
    PartialFailure { count: usize, first: String },

    #[error("{0} property violation(s)")]
    Violations(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for solver
    /// failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Solver(_) | HarnessError::PartialFailure { .. } => 3,
            HarnessError::Violations(_) | HarnessError::Io(_) => 1,
        }
    }
}
