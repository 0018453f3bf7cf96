use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("empty mask")]
    EmptyMask,
    #[error("duplicate index {0:?}")]
    DuplicateIndex(Vec<i64>),
    #[error("inconsistent matrix shape: {0}")]
    Shape(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("symbol evaluated at a point with a zero component")]
    ZeroComponent,
    #[error("mask violates sum rules: {0}")]
    SumRule(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("subspace is not invariant under the transition operators: {0}")]
    NotInvariant(String),
    #[error("generators are linearly dependent")]
    Dependent,
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
    #[error("internal error: {0}")]
    Internal(String),
}
