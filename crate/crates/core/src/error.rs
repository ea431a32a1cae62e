use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("ellipticity violated: lambda({z}) = {value} outside [{lower}, {upper}]")]
    Ellipticity {
        z: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("grid under-resolves mode {mode}: {detail}")]
    UnderResolvedGrid { mode: String, detail: String },

    #[error("vertical quadrature did not converge (achieved {achieved:e}, required {required:e})")]
    QuadratureNonConvergence { achieved: f64, required: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("non-finite data in {0}")]
    NonFinite(&'static str),

    #[error("singular Galerkin system: {0}")]
    SingularSystem(String),

    #[error("operation requires lambda == 1, got profile {0}")]
    NonUnitLambda(String),

    #[error("mollifier kernel under-resolved: grid spacing {spacing} > epsilon/4 = {limit}")]
    UnderResolvedKernel { spacing: f64, limit: f64 },

    #[error("padding of {available} too small for extension width {required}")]
    InsufficientPadding { available: f64, required: f64 },

    #[error("arrival point ({x}, {y}) outside padded box")]
    OutsideBox { x: f64, y: f64 },

    #[error("non-finite velocity at ({x}, {y}, t = {t})")]
    NonFiniteVelocity { x: f64, y: f64, t: f64 },

    #[error("fixed-point iteration failed at minimal window starting t = {t0}: {reason}")]
    WindowUnderflow {
        t0: f64,
        reason: String,
        history: Vec<f64>,
    },

    #[error("SQG instability: norm grew from {before:e} to {after:e} in one step")]
    Instability { before: f64, after: f64 },

    #[error("configuration error at {key}: {message}")]
    Config { key: String, message: String },

    #[error("configuration parse error: {0}")]
    ConfigParse(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
