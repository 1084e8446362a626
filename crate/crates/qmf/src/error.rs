//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("quadratic tensor slice {index} is not symmetric (max asymmetry {asymmetry:.3e})")]
    NonSymmetricSlice { index: usize, asymmetry: f64 },

    #[error("centered data has only {found} positive spectral directions, need {needed}")]
    RankDeficient { needed: usize, found: usize },

    #[error(
        "latent coordinates collapsed: centered covariance eigenvalue {eigenvalue:.3e} \
         is below {threshold:.3e}"
    )]
    RankCollapse { eigenvalue: f64, threshold: f64 },

    #[error("singular linear system in {context} (reciprocal condition {rcond:.3e})")]
    SingularSystem { context: &'static str, rcond: f64 },

    #[error("bandwidth must be positive and finite, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("no chart members within radius {0}")]
    EmptyChart(f64),

    #[error("chart requests {requested} members but the cloud has only {available} points")]
    InsufficientNeighbors { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown shape {0:?} (expected unit-circle, unit-sphere, sine-curve or swiss-roll)")]
    UnknownShape(String),

    #[error("projection target is equidistant from the manifold (distance is not differentiable)")]
    AmbiguousProjection,

    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
