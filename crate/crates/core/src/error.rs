use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("stability criterion violated: delta'(c) = {delta_prime:.6e} <= 0 at c = {c}")]
    StabilityViolated { c: f64, delta_prime: f64 },

    #[error("regularization alpha = {alpha} is inadmissible: {reason}")]
    AlphaInadmissible { alpha: f64, reason: String },

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("left the modulation tube: |xi|_H1 = {xi_h1:.4e} > radius {radius:.4e}{}", at_time(*.time))]
    TubeExit { xi_h1: f64, radius: f64, time: Option<f64> },

    #[error("speed c = {c:.6} left the interval [{lo}, {hi}]{}", at_time(*.time))]
    IntervalExit {
        c: f64,
        lo: f64,
        hi: f64,
        time: Option<f64>,
    },

    #[error("solution blew up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn at_time(t: Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

impl Error {
    /// Attach a time stamp to errors that carry one.
    pub fn at(self, t: f64) -> Self {
        match self {
            Error::TubeExit { xi_h1, radius, .. } => Error::TubeExit {
                xi_h1,
                radius,
                time: Some(t),
            },
            Error::IntervalExit { c, lo, hi, .. } => Error::IntervalExit {
                c,
                lo,
                hi,
                time: Some(t),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
