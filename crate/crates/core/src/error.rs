use thiserror::Error;

/// Errors raised by the estimation laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QfeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("observation vector too short: need {required} coordinates, got {actual}")]
    ObservationTooShort { required: u64, actual: u64 },

    #[error("noise level mismatch: estimator built for n = {expected}, called with n = {actual}")]
    NoiseMismatch { expected: f64, actual: f64 },

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {error:e})")]
    QuadratureNoConvergence { subdivisions: usize, error: f64 },

    #[error("grid too large: {points:e} points exceeds the limit of {limit:e}")]
    GridTooLarge { points: f64, limit: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),
}

pub type Result<T, E = QfeError> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(QfeError::InvalidArgument(msg.into()))
}
