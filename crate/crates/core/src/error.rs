use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("every log-density entry is -inf; nothing to normalize")]
    AllZero,

    #[error("{what} = {value} is outside its domain")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("densities live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("design matrix is singular")]
    SingularDesign,

    #[error("information matrix is singular or not positive definite")]
    SingularInformation,

    #[error("dimension {0} is not supported (only 1-D grids)")]
    DimensionUnsupported(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid spline model: {0}")]
    InvalidModel(String),

    #[error("invalid chain initialisation: {0}")]
    InitInvalid(String),

    #[error("infeasible artificial design: {0}")]
    InfeasibleGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no reference value for {method} at n={n}, theta={theta}")]
    UnknownCell { method: String, n: usize, theta: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn out_of_domain(what: &'static str, value: f64) -> Self {
        Error::OutOfDomain { what, value }
    }
}
