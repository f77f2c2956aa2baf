use thiserror::Error;

/// Errors produced anywhere in the setup/solve pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({nrows}x{ncols})")]
    NotSquare { nrows: usize, ncols: usize },

    #[error("dense conversion refused: {rows} rows exceeds the limit of {limit}")]
    DenseTooLarge { rows: usize, limit: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("subdomain {subdomain}: {source}")]
    Subdomain {
        subdomain: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("breakdown at iteration {iteration}: {msg}")]
    Breakdown { iteration: usize, msg: String },

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach a subdomain index to an error raised while processing it.
    pub fn in_subdomain(self, subdomain: usize) -> Self {
        match self {
            e @ Error::Subdomain { .. } => e,
            e => Error::Subdomain { subdomain, source: Box::new(e) },
        }
    }

    /// Short machine-readable tag, used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::NotSquare { .. } => "not-square",
            Error::DenseTooLarge { .. } => "dense-too-large",
            Error::NotSpd(_) => "not-spd",
            Error::Singular(_) => "singular",
            Error::Subdomain { source, .. } => source.kind(),
            Error::InvalidArgument(_) => "invalid-argument",
            Error::NoConvergence(_) => "eigensolver",
            Error::Breakdown { .. } => "breakdown",
            Error::NotConverged { .. } => "not-converged",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
