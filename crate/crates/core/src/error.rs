use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node {node} is out of range 1..={p}")]
    NodeOutOfRange { node: usize, p: usize },

    #[error("directed cycle through node {node}")]
    Cycle { node: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("variable {label} is not present in the covariance matrix")]
    MissingVariable { label: usize },

    #[error("matrix is not positive definite: pivot of variable {label} is {pivot:e}")]
    NotPositiveDefinite { label: usize, pivot: f64 },

    #[error("singular covariance block over variables {labels:?}")]
    Singular { labels: Vec<usize> },

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("column {column} has tied values in {fraction:.4} of observations")]
    TooManyTies { column: usize, fraction: f64 },

    #[error("no consistent DAG extension: {0}")]
    NoExtension(String),

    #[error("equivalence class enumeration exceeded {cap} DAGs")]
    EnumerationTooLarge { cap: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

impl Error {
    /// True for failures caused by the numbers rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::Singular { .. }
                | Error::ZeroVariance { .. }
                | Error::TooManyTies { .. }
                | Error::NoExtension(_)
                | Error::EnumerationTooLarge { .. }
                | Error::Hypothesis(_)
        )
    }
}
