use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("time {t} outside of the available window [{start}, {end}]")]
    Domain { t: f64, start: f64, end: f64 },

    #[error("non-finite value in component {component} at x = {point}")]
    NonFinite { component: usize, point: f64 },

    #[error("solution diverged (|x| > 1e150) at t = {time}")]
    Divergence { time: f64 },

    #[error("the Lyapunov functional is undefined at the zero state")]
    UndefinedAtZero,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("eigenvalue {re}{im:+}i is not simple (rank deficiency {deficiency})")]
    MultipleEigenvalue { re: f64, im: f64, deficiency: usize },

    #[error("assumption (A1) does not hold: {0}")]
    A1Violated(String),

    #[error("unsupported system: {0}")]
    Unsupported(String),

    #[error("the number of decreasing regulation functions is even; the loop has positive feedback")]
    InconsistentParity,

    #[error("residual {residual:e} at the zero state exceeds tolerance; system is not zero-centered")]
    NotZeroCentered { residual: f64 },

    #[error("spec parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
