use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("resource cap exceeded: {what} needs {requested}, cap is {cap}")]
    Resource {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(
        "operators A[{s}][{j}] and A[{t}][{l}] do not commute (relative residual {residual:.3e})"
    )]
    Commutation {
        s: usize,
        j: usize,
        t: usize,
        l: usize,
        residual: f64,
    },

    #[error("series does not converge: estimated radius {radius:.6} exceeds {limit:.6}")]
    Divergence { radius: f64, limit: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("variety subspace is trivial (N_Q = {{0}})")]
    EmptyVariety,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
