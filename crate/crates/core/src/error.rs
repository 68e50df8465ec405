use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the unit cube")]
    Domain { point: Vec<f64> },

    #[error("quadrature is supported for d <= 3 only, got d = {0}")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("training diverged in restart {restart} at epoch {epoch}")]
    TrainingDivergence { restart: usize, epoch: usize },

    #[error("interpolation infeasible: {0}")]
    InterpolationInfeasible(String),

    #[error("no projection direction with distinct abscissas after {0} attempts")]
    DegenerateDirection(usize),

    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),

    #[error("decode error at bit offset {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("experiment failed: {0}")]
    ExperimentFailed(String),

    #[error("parse error in {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Validation errors map to exit code 2, everything else to 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::UnsupportedDimension(_)
                | Error::InvalidArgument(_)
                | Error::InvalidSpec(_)
                | Error::Structural(_)
                | Error::InfeasibleBudget(_)
                | Error::Parse { .. }
        )
    }
}
