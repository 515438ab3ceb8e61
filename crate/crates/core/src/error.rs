use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point {x} lies outside the computational domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    /// A particle configuration left the admissible set (particles touched or crossed).
    #[error("particle configuration is not strictly ordered at index {index}")]
    Inadmissible { index: usize },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("line search failed near the boundary of the admissible set after {halvings} halvings")]
    LineSearch { halvings: usize },

    /// No bulk particle remains outside the buffer strips.
    #[error("all bulk particles lie inside the boundary buffers")]
    Absorbed,

    #[error("time step too large: tau*alpha = {flux:e} exceeds boundary cell width {width:e}")]
    StepTooLarge { flux: f64, width: f64 },

    #[error("explicit step {tau:e} violates the stability limit {limit:e}")]
    Cfl { tau: f64, limit: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
