use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("QR iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid path: {0}")]
    Path(String),

    #[error("lattice too small: {0}")]
    Size(String),

    /// Condition-table verdict and minimal-polynomial verdict disagree.
    #[error("classification mismatch: condition table says {table}, minimal polynomial says {minimal_poly}")]
    Consistency { table: String, minimal_poly: String },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("degenerate response: {0}")]
    DegenerateResponse(String),

    #[error("ambiguous growth fit: {0}")]
    AmbiguousFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
