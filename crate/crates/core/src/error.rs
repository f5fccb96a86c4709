use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid cut: {0}")]
    InvalidCut(String),
    #[error("invalid vertex partition: {0}")]
    InvalidPartition(String),
    #[error("conductance undefined: a side has zero volume")]
    UndefinedConductance,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance too large for exhaustive search: n = {n}, bound = {bound}")]
    SizeBound { n: usize, bound: usize },
    #[error("flow does not yield a matching: {0}")]
    NotAMatching(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("randomized procedure failed: {0}")]
    RandomizedFailure(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("LP solver: {0}")]
    Lp(String),
    #[error("I/O: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
