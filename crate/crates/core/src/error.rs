use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("eigenvalue window too large: {count} eigenvalues below {energy} (cap {cap})")]
    WindowTooLarge { energy: f64, count: usize, cap: usize },

    #[error("inverse iteration did not converge for lambda = {lambda} (residual {residual:.3e})")]
    NoConvergence { lambda: f64, residual: f64 },

    #[error("ODE step size collapsed at x = {x}")]
    StepCollapse { x: f64 },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge (estimated error {estimate:.3e}, tolerance {tolerance:.3e})")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{experiment}: {source}")]
    Experiment {
        experiment: String,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
