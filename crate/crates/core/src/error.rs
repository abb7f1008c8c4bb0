use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate parameters at mode k={mode}: {detail}")]
    Degenerate { mode: usize, detail: String },
    #[error("solver error: {0}")]
    Solver(String),
    #[error("newton iteration did not converge after {iters} iterations (residual {residual:e})")]
    Divergence { iters: usize, residual: f64 },
    #[error("not found: {0}")]
    NotFound(String),
}

pub type Result<T> = std::result::Result<T, Error>;
