use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("OPF infeasible; violated constraints: {}", violated.join(", "))]
    Infeasible { violated: Vec<String> },

    #[error("solver did not converge after {iterations} iterations (gap {gap:.3e}, dual residual {dual_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        dual_residual: f64,
    },

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("data quality error: {0}")]
    DataQuality(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
