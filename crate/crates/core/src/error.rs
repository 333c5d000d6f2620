use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("point outside the admissible region: {0}")]
    Domain(String),
    #[error("kernel singularity: {0}")]
    Singularity(String),
    #[error("integral diverges: {0}")]
    Divergence(String),
    #[error("quadrature did not reach tolerance: {0}")]
    Tolerance(String),
    #[error("grid resolution too coarse: {0}")]
    Resolution(String),
    #[error("not enough Monte Carlo samples: {0}")]
    StatisticalPower(String),
    #[error("fit range too narrow: {0}")]
    InsufficientRange(String),
    #[error("integrand not integrable: {0}")]
    Integrability(String),
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
