use alloc::string::String;

use crate::geometry::Point;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point {0:?} lies outside the closed domain")]
    OutsideDomain(Point),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("invalid boundary point: {0}")]
    InvalidBoundaryPoint(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential leaves the class V(Ω, a) at node {node}: V·δ² = {value} exceeds a = {bound}")]
    PotentialBound { node: usize, value: f64, bound: f64 },

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("assembly is not positive definite: pivot {pivot:e} at elimination step {step}")]
    NotPositiveDefinite { step: usize, pivot: f64 },

    #[error("linear solve stopped at relative residual {residual:e} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    #[error("eigenvalue iteration stopped at relative residual {residual:e} after {iterations} iterations")]
    EigenNonConvergence { residual: f64, iterations: usize },

    #[error("invalid pole: {0}")]
    InvalidPole(String),

    #[error("field length {found} does not match node count {expected}")]
    FieldLength { expected: usize, found: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient statistics: {retained} retained paths, at least {required} needed")]
    InsufficientStatistics { retained: usize, required: usize },
}
