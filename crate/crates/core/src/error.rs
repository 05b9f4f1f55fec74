use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("overflow: result magnitude exp({log_magnitude:.3}) is not representable")]
    Overflow { log_magnitude: f64 },

    #[error("invalid quadrature: {0}")]
    InvalidQuadrature(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("point {modulus} lies outside the validity radius {validity_radius}")]
    OutOfDomain { modulus: f64, validity_radius: f64 },

    #[error("root iteration did not converge after {iterations} sweeps ({unconverged} roots still moving)")]
    NonConvergence {
        iterations: usize,
        unconverged: usize,
        /// Largest correction per sweep.
        trace: Vec<f64>,
    },

    #[error("contour |z| = {radius} passes through or near a zero (min |F*| = {min_modulus:e}) after all nudges")]
    ContourThroughZero { radius: f64, min_modulus: f64 },

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("coincident points: covariance block is singular")]
    CoincidentPoints,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("incomplete data: missing samples for indices {0:?}")]
    IncompleteData(Vec<(i64, i64)>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
