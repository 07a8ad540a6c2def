use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear solver did not converge: {iterations} iterations, relative residual {residual:e}")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("evolution diverged at iteration {iteration}: max |phi| = {max_abs:e}")]
    Diverged { iteration: usize, max_abs: f64 },

    #[error("failed to parse {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
