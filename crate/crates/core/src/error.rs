use thiserror::Error;

/// Unified error type for model construction and numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("deformation must be nonnegative, got {0}")]
    NegativeDeformation(f64),

    #[error("invalid rate family: {0}")]
    InvalidRateFamily(String),

    #[error("closed-form flow requires alpha = 1, got alpha = {alpha}")]
    ElasticOnly { alpha: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("stationary density is trivial for non-positive velocity (v = {v})")]
    TrivialRegime { v: f64 },

    #[error("no positive stationary velocity exists for this rate family")]
    NoStationaryVelocity,

    #[error("rate tail coefficient B = {b} leaves density at infinity; only B = 0 is admissible")]
    UnphysicalRateTail { b: f64 },

    #[error("time step {dt} exceeds the stable limit {dt_max}")]
    CflViolation { dt: f64, dt_max: f64 },

    #[error("too few events in the fitting window: have {have}, need {need}")]
    TooFewEvents { have: usize, need: usize },

    #[error("degenerate sample: zero spread in log energies")]
    ZeroLogSpread,

    #[error("root search failed: {0}")]
    RootSearch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
