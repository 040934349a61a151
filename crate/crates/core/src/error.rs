use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("state left the declared domain at param {param}: x = {x:?}")]
    DomainExit { param: f64, x: Vec<f64> },

    #[error("non-finite value encountered at param {param}")]
    NonFinite { param: f64 },

    #[error("phase velocity violates 0 < m <= omega <= M at x = {x:?}: [{lo}, {hi}] not in [{m}, {big_m}]")]
    PhaseVelocityBounds {
        x: Vec<f64>,
        lo: f64,
        hi: f64,
        m: f64,
        big_m: f64,
    },

    #[error("fixed-point iteration did not reach tolerance after {} iterations", gaps.len())]
    NotConverged { gaps: Vec<f64> },

    #[error("averaging requires convex-valued fields")]
    NonConvexField,

    #[error("certificate constant is unbounded (overflow)")]
    Unbounded,

    #[error("decoupling matrix is singular at x = {x:?} (condition number {cond:e})")]
    Singular { x: Vec<f64>, cond: f64 },

    #[error("input has no authority along the current direction (|B| = {norm:e})")]
    Uncontrollable { norm: f64 },

    #[error("beating: second guard crossing within one step at t = {t}")]
    Beating {
        t: f64,
        x_minus: Vec<f64>,
        x_plus: Vec<f64>,
    },

    #[error("suspected Zeno execution: {jumps} jumps within one time unit ending at t = {t}")]
    Zeno { t: f64, jumps: usize },

    #[error("guard crossing is not transversal at t = {t} (|grad s . xdot| = {rate:e})")]
    Grazing { t: f64, rate: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
