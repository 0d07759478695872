use thiserror::Error;

/// Errors produced by map evaluation, model validation, and the rescaled
/// return-map pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("map is not invertible: B = 0")]
    ZeroB,

    #[error("orbit escaped to radius {radius:.3e} at step {step}")]
    Escaped { step: usize, radius: f64 },

    #[error("quadratic tangency coefficient d vanishes")]
    DegenerateTangency,

    #[error("degenerate coefficient: {0}")]
    DegenerateCoefficient(&'static str),

    #[error("saddle multipliers violate 0 < |lambda2| < |lambda1| < 1 < |gamma|: {0}")]
    ConditionA(String),

    #[error("return index k = {k} below minimum {k_min}: strip is empty")]
    EmptyStrip { k: usize, k_min: usize },

    #[error("k = {k} exceeds floating-range cap {k_max} for gamma = {gamma}")]
    KRangeCap { k: usize, k_max: usize, gamma: f64 },

    #[error("local-map cubic tails are not supported by the rescaled return map")]
    UnsupportedTails,

    #[error("operation requires a {expected} tangency, model has {actual}")]
    CaseMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("|M3| = {0:.3e} too close to zero for the case conjugacy")]
    SmallM3(f64),

    #[error("fewer than {needed} usable k values ({got}) for the rate fit")]
    InsufficientRange { got: usize, needed: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical solve failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
