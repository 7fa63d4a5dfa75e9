use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input")]
    Empty,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("weight {index} is negative ({value:e})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights have no positive mass")]
    ZeroMass,

    #[error("relative entropy is infinite: u[{index}] > 0 but w[{index}] = 0")]
    InfiniteDivergence { index: usize },

    #[error("step size {step:e} exceeds the admissible maximum {max:e}")]
    StepTooLarge { step: f64, max: f64 },

    #[error("direction is not a descent direction (slope {slope:e})")]
    NotDescent { slope: f64 },

    #[error("line search failed after {shrinks} shrinks; gradient may be inconsistent with the objective")]
    LineSearchExhausted { shrinks: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("loss l[{index}] = {value} is outside [0, 1]")]
    LossOutOfRange { index: usize, value: f64 },

    #[error("no-junk-bond violation: price relative at row {row}, column {column} is {value}")]
    NoJunkBond { row: usize, column: usize, value: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("oracle supports at most {max} assets, got {found}")]
    OracleScale { max: usize, found: usize },

    #[error("sharpe ratio is undefined for zero return volatility")]
    UndefinedSharpe,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the bench binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 1,
            Error::NoJunkBond { .. }
            | Error::Parse(_)
            | Error::LossOutOfRange { .. }
            | Error::Io { .. }
            | Error::OracleScale { .. } => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
