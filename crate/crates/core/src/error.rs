//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("quadrature failed to converge for coefficient index {index}")]
    QuadratureNonConvergence { index: usize },

    #[error("factor matrix {index} is singular")]
    SingularFactor { index: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transfer function evaluated too close to a pole")]
    PoleProximity,

    #[error("zero frequency response at the requested frequency")]
    ZeroResponse,

    #[error("quadratic form returned a significantly negative value: {0}")]
    NegativeQuadraticForm(f64),

    #[error("state integration blew up at t = {t}")]
    IntegrationBlowup { t: f64 },

    #[error("calibration bracket has no sign change: {0}")]
    CalibrationBracket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SpectralError>;
