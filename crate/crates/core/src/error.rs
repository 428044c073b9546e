use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point lies {dist:e} outside the parameter space (tolerance {tol:e})")]
    OutsideSpace { dist: f64, tol: f64 },

    #[error("insufficient samples for the requested KL accuracy: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("infeasible optimizer configuration: {0}")]
    InfeasibleConfig(String),

    #[error("calibration did not converge: {0}")]
    CalibrationDiverged(String),

    #[error("no divergence calibration available for family '{0}'")]
    CalibrationMissing(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
