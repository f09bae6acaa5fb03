use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("operator flavor mismatch: expected {expected}")]
    FlavorMismatch { expected: &'static str },

    #[error("grid too coarse: Nyquist shell carries {fraction:.3e} of the spectrum (limit {limit:.1e})")]
    Aliasing { fraction: f64, limit: f64 },

    #[error("derivative order {order} exceeds the cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not self-converge: relative change {change:.3e} > {tol:.1e}")]
    NonConvergence { change: f64, tol: f64 },

    #[error("divergent tail: {0}")]
    DivergentTail(String),

    #[error("invalid localization geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid differentiation chain: {0}")]
    InvalidChain(String),

    #[error("potential is singular on the sampled region: {0}")]
    Singular(String),

    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("empty fit band: {0}")]
    EmptyBand(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
