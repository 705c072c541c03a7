use thiserror::Error;

/// Errors raised by the attitude-control library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric: symmetric part has norm {sym_norm:e}")]
    NotSkew { sym_norm: f64 },

    #[error("matrix is not a rotation: defect {defect:e}, det {det}")]
    NotRotation { defect: f64, det: f64 },

    #[error("det R = {det} is not positive; the manifold potential is only defined for det R > 0")]
    NonPositiveDeterminant { det: f64 },

    #[error("{what} is not symmetric positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("time {t} is outside the reference horizon [{start}, {end}]")]
    OutsideHorizon { t: f64, start: f64, end: f64 },

    #[error("gain gate failed for {variant}: {reason}")]
    GainGate {
        variant: &'static str,
        reason: String,
        spectral_abscissa: Option<f64>,
        bound: Option<f64>,
    },

    #[error("eigenvalue iteration did not converge; Hurwitz verdict is indeterminate")]
    EigenNotConverged,

    #[error("non-finite state or derivative at t = {t}")]
    NonFinite { t: f64 },

    #[error("exponential fit needs at least {required} samples in the window, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
