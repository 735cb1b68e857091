use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("result overflows f64: {0}")]
    Overflow(String),
    #[error("bidegree mismatch: expected {expected:?}, got {got:?}")]
    BidegreeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("search cap of {0} exceeded")]
    CapExceeded(usize),
    #[error("polynomial pair is not achievable: {0}")]
    NotAchievable(String),
    #[error("schedule rejected: {0}")]
    BadSchedule(String),
    #[error("optimizer did not converge (final cost {0:e})")]
    NotConverged(f64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("tuning failed: {0}")]
    Tuning(String),
}

pub type Result<T> = std::result::Result<T, Error>;
