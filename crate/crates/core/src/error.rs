use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid boundary profile: {0}")]
    InvalidProfile(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("node ({i}, {j}) outside a {nx}x{ny} grid")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        nx: usize,
        ny: usize,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear solve failed: {0}")]
    SingularLinearization(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("eigensolver stopped after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    EigenNotConverged(Box<crate::eigen::EigenResult>),
    #[error("at eps = {eps}: {source}")]
    AtEpsilon {
        eps: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
