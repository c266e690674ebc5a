use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("series `{series}` lacks history: first feasible low-frequency period is {first_feasible}")]
    CalendarAlignment { series: String, first_feasible: usize },

    #[error("non-finite value during sweep {sweep}: {what}")]
    NonFinite { sweep: usize, what: String },

    #[error("bisection does not bracket the target: f({lo}) = {f_lo}, f({hi}) = {f_hi}, target {target}")]
    NonBracketing {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
        target: f64,
    },

    #[error("no convergence after {iterations} iterations (final gradient norm {gradient_norm:e})")]
    NoConvergence { iterations: usize, gradient_norm: f64 },

    #[error("predictive density is zero at outcome {outcome} (period {period})")]
    ZeroDensity { period: usize, outcome: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("panel error: {0}")]
    Panel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
