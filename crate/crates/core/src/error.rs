use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("matrix is not doubly stochastic (max row/column deviation {0:e})")]
    NotDoublyStochastic(f64),

    #[error("row {0} of the affinity has no positive entry")]
    ZeroRow(usize),

    #[error(
        "Sinkhorn balancing did not converge in {iterations} iterations (deviation {deviation:e}); \
         the graph likely lacks total support, try a larger k"
    )]
    SinkhornDiverged { iterations: usize, deviation: f64 },

    #[error(
        "N = {n} exceeds the dense eigensolver budget of {limit}; reduce the number of vertices"
    )]
    DenseBudget { n: usize, limit: usize },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
