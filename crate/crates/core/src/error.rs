use thiserror::Error;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("coordinate mismatch: {0}")]
    CoordMismatch(String),

    #[error("CFL limit exceeded at t = {t:.6}: number {cfl:.3} > {limit:.3}")]
    Cfl { t: f64, cfl: f64, limit: f64 },

    #[error("non-finite value in {what} at t = {t:.6}")]
    NonFinite { t: f64, what: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("incompatible data: {0}")]
    Incompatible(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("stage {stage} failed: {source}")]
    Stage { stage: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
