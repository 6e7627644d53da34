use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("root finder did not converge for a degree-{degree} polynomial")]
    NonConvergence { degree: usize },

    #[error("improper system: numerator degree {num} exceeds denominator degree {den}")]
    ImproperSystem { num: usize, den: usize },

    #[error("degenerate approximation: evaluated factor {value:e} is too close to zero")]
    DegenerateApproximation { value: f64 },

    #[error("transfer function has a pole at z = 1")]
    PoleAtOne,

    #[error("transfer function has a pole on the unit circle at omega = {omega}")]
    PoleOnUnitCircle { omega: f64 },

    #[error("insufficient preview: {required} samples required, {given} given")]
    InsufficientPreview { required: usize, given: usize },

    #[error("integration produced a non-finite state")]
    NonFiniteState,

    #[error("non-finite Jacobian entry at ({row}, {col})")]
    NonFiniteJacobian { row: usize, col: usize },

    #[error("pair (A, B) is not controllable (condition number {condition:e})")]
    Uncontrollable { condition: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite loss {loss} at epoch {epoch} (batch {batch})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        loss: f64,
    },

    #[error("log {id} has {len} samples, selection needs at least {needed}")]
    LogTooShort {
        id: usize,
        len: usize,
        needed: usize,
    },

    #[error("window length {found}, generator expects {expected}")]
    WindowLength { expected: usize, found: usize },

    #[error("baseline diverged on training trajectory {id} at t = {time} s")]
    BaselineDiverged { id: usize, time: f64 },

    #[error("evaluation window is empty")]
    EmptyWindow,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),

    #[error("unknown system '{0}'")]
    UnknownSystem(String),

    #[error("bad drawing: {0}")]
    BadDrawing(String),

    #[error("config error at '{path}': {message}")]
    Config { path: String, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
