use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown fractal `{0}` (expected sg, hexagasket or sg3)")]
    UnknownFractal(String),

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid address: {0}")]
    InvalidAddress(String),

    #[error("cell {0} meets the outer boundary V0; no full neighborhood at this level")]
    TouchesBoundary(String),

    #[error("operation requires the Sierpinski gasket: {0}")]
    Unsupported(String),

    #[error("depth {depth} exceeds the cap {cap}")]
    DepthCap { depth: usize, cap: usize },

    #[error("no renormalization factor in (0,1): {0}")]
    NoRenormalization(String),

    #[error("numerical non-convergence: {message} (best residual {residual:e})")]
    NotConverged { message: String, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
