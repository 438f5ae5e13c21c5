use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
    #[error("numerical failure in {backend}: {detail}")]
    Numerical {
        backend: &'static str,
        detail: String,
    },
    #[error("invalid option: {0}")]
    InvalidOption(String),
}
