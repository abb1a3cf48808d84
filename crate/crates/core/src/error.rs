use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice size {0} is outside the supported range 2..=14")]
    Capacity(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("Krylov exponential did not converge within {max_dim} vectors (residual estimate {residual:.3e})")]
    KrylovNonConvergence { max_dim: usize, residual: f64 },

    #[error("spectral gap is not positive at B = {field} (gap {gap:.3e})")]
    ClosedGap { field: f64, gap: f64 },

    #[error("accumulated ramp time is not increasing at B = {field}")]
    Integrity { field: f64 },

    #[error("every step was pruned at threshold {threshold}")]
    EmptySchedule { threshold: f64 },

    #[error("error ratio is undefined when both angles vanish")]
    UndefinedRatio,

    #[error("Trotter energy budget {budget} not reached with at most {m_max} layers per step (ratio {ratio:.3})")]
    TrotterBudget { budget: f64, m_max: usize, ratio: f64 },

    #[error("all {0} optimization runs failed")]
    AllRunsFailed(usize),

    #[error("plot: {0}")]
    Plot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
