use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the design, simulation and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:.6e} <= threshold {threshold:.6e}")]
    NotPositiveDefinite { min_eigenvalue: f64, threshold: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible subproblem: {0}")]
    Infeasible(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output failed for {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("failed to parse config {}: {message}", path.display())]
    ConfigParse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
