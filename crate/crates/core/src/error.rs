use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// `sin(alpha)` fell below the pole threshold.
    #[error("pole singularity: alpha = {alpha} is within the pole tolerance")]
    PoleSingularity { alpha: f64 },

    /// A query touched the node tube `|psi|^2 < tau_node * max|psi|^2`.
    #[error("node too close: |psi|^2 = {density:e} below threshold {threshold:e}")]
    NodeTooClose { density: f64, threshold: f64 },

    #[error("step too large: displacement {displacement} exceeds cell size {limit}")]
    StepTooLarge { displacement: f64, limit: f64 },

    #[error("degenerate jacobian: |J| = {jacobian:e}")]
    DegenerateJacobian { jacobian: f64 },

    #[error("shape mismatch: expected {expected} samples, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("circulation is not quantized: loop integral / h = {value}")]
    NonIntegerWinding { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
