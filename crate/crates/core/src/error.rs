use thiserror::Error;

/// Errors raised anywhere in the engine.
///
/// Numeric failures carry the offending point so callers can report where a
/// chart or stencil broke down.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SmmsError {
    #[error("point {point:?} lies outside the chart domain (axis {axis})")]
    Domain { point: Vec<f64>, axis: usize },

    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    SingularMetric { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("non-finite value encountered at {point:?}: {what}")]
    NonFinite { point: Vec<f64>, what: String },

    #[error("rank or dimension mismatch: {0}")]
    RankMismatch(String),

    #[error("invalid smooth metric measure space: {0}")]
    InvalidSmms(String),

    #[error("density function is constant on the probed points")]
    ConstantDensity,

    #[error("formal warped product needs a positive integer m, got {0}")]
    NonIntegerM(f64),

    #[error("need at least {needed} sample points, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("fiber cannot be realized in coordinates: {0}")]
    UnrealizableFiber(String),

    #[error("warping function is not positive at t = {t} (value {value})")]
    NonPositiveWarp { t: f64, value: f64 },

    #[error("{family}: parameter constraint violated: {clause}")]
    ParamConstraintViolation { family: String, clause: String },

    #[error("{family}: missing parameter `{param}`")]
    MissingParam { family: String, param: String },

    #[error("unknown family id `{0}`")]
    UnknownFamily(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator produced a non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, SmmsError>;
