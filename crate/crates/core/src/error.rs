//! Error type shared by all solver and diagnostic modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),
    #[error("not SPD: minimum eigenvalue {0} <= 0")]
    NotSpd(f64),
    #[error("stencil out of range at node {0:?}")]
    StencilOutOfRange(Vec<usize>),
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
    #[error("linear solver did not converge: {0}")]
    LinearSolve(String),
    #[error("stagnation: damping exhausted at residual {residual}")]
    Stagnation { residual: f64 },
    #[error("lost convexity: {count} interior nodes below -eps_cvx at convergence")]
    LostConvexity { count: usize },
    #[error("lost ellipticity: I + D2(xi) not positive definite under all damping levels")]
    LostEllipticity,
    #[error("incompatible average: cell mean of density is {0}, expected 1")]
    IncompatibleAverage(f64),
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("outside theorem hypothesis: {0}")]
    OutsideHypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
