use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: expected {expected} entries, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("quadrature did not converge on cell {cell} (error estimate {estimate:e})")]
    Quadrature { cell: usize, estimate: f64 },

    #[error("coefficient bound violated at t = {t}, cell {cell}: a = {value} not in [{lower}, {upper}]")]
    CoefficientBound {
        t: f64,
        cell: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("trajectory start {found} differs from the prescribed initial value {expected}")]
    InitialMismatch { expected: f64, found: f64 },

    #[error("singular tridiagonal system (pivot {pivot:e} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("nonlinear iteration failed at step {step} (eps = {eps:e}) after damping retry; last residuals {residuals:?}")]
    NonConvergence {
        step: usize,
        eps: f64,
        residuals: Vec<f64>,
    },

    #[error("truncation bound escalated {escalations} times without containing the solution (last M = {bound})")]
    TruncationBudget { escalations: usize, bound: f64 },

    #[error("Mittag-Leffler evaluation failed: {0}")]
    MittagLeffler(String),

    #[error("data hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
