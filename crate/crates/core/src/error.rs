use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the model, solver, asymptotics and fitting code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("wealth {w} is below the debt floor -{delta}")]
    BelowDebtFloor { w: f64, delta: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sampled policy queried at w = {w} outside its grid [{lo}, {hi}]")]
    Extrapolation { w: f64, lo: f64, hi: f64 },

    #[error("redistribution is not integrable: {0}")]
    Integrability(String),

    #[error("distribution invariant violated: {0}")]
    InvalidDistribution(String),

    #[error("undefined regime: {0}")]
    UndefinedRegime(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("step size too large: {0}")]
    StepSize(String),

    #[error("discretization error: {0}")]
    Discretization(String),

    #[error("agent wealth {w} outside histogram range [{lo}, {hi}]")]
    Range { w: f64, lo: f64, hi: f64 },

    #[error("no crossover: {0}")]
    NoCrossover(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("record {line}: {reason}")]
    Record { line: usize, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
