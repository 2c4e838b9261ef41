use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh specification: {0}")]
    InvalidDomain(String),

    #[error("mesh invariant violated: {0}")]
    InvalidMesh(String),

    #[error("mesh quality {quality:.4} below floor {floor:.4} at triangle {triangle}")]
    MeshQuality { triangle: usize, quality: f64, floor: f64 },

    #[error("conductivity is not positive definite at ({x}, {y}): min eigenvalue {min_eig:e}")]
    Conductivity { x: f64, y: f64, min_eig: f64 },

    #[error("unsupported quadrature order {0} (expected 1 or 2)")]
    Quadrature(usize),

    #[error("bordered state system is singular")]
    SingularSystem,

    #[error("state solve failed for frame column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("truncation level {k} outside 1..={rank}")]
    Truncation { k: usize, rank: usize },

    #[error("weight w_{index} = {value:e} below floor {floor:e}: basis vector lies in the null space")]
    NullBasisVector { index: usize, value: f64, floor: f64 },

    #[error("projection is not symmetric idempotent (deviation {0:e})")]
    NotProjection(f64),

    #[error("invalid source configuration: {0}")]
    Source(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("constant noise-free data cannot carry a relative noise level")]
    ConstantData,

    #[error("solve failed at alpha = {alpha:e}: {source}")]
    AtAlpha {
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
