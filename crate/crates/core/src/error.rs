use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported atom count {0}: only 2 or 3 atoms are supported")]
    UnsupportedAtomCount(usize),

    #[error("unknown state name `{name}` for a {n_atoms}-atom basis")]
    UnknownState { name: String, n_atoms: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse angle `{0}`")]
    Angle(String),

    #[error("sequence parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("ill-conditioned series fit (condition number {0:.3e}); choose a different grid")]
    IllConditioned(f64),

    #[error("{what} did not converge (residual {residual:.3e})")]
    NoConvergence { what: String, residual: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
