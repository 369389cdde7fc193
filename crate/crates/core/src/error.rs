use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A triangular factor had a diagonal entry below the rank tolerance.
    #[error("rank deficient: |R[{index},{index}]| = {value:e} is below tolerance {tol:e}")]
    Rank { index: usize, value: f64, tol: f64 },

    #[error("singular: {0}")]
    Singular(String),

    #[error(
        "ADMM did not converge for column {column} within {iterations} iterations \
         (worst primal residual {primal:e}, worst dual residual {dual:e})"
    )]
    Convergence {
        column: usize,
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_trial(self, trial: usize) -> Self {
        Error::Trial {
            trial,
            source: Box::new(self),
        }
    }
}
