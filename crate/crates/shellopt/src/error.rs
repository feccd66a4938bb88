//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by mesh construction and queries.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh resolution must be at least 1x1, got {0}x{1}")]
    InvalidResolution(usize, usize),
    #[error("element {0} is not active")]
    InactiveElement(usize),
    #[error("element {0} is already at the maximum refinement depth")]
    DepthExceeded(usize),
    #[error("vertex {0} is a T-junction, not a basis vertex")]
    NotABasisVertex(usize),
    #[error("point ({0}, {1}) lies outside the parameter domain [0,1]^2")]
    OutOfDomain(f64, f64),
}

/// Errors raised by spline-space operations.
#[derive(Debug, Error)]
pub enum SpaceError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("space was built over a different mesh than the field")]
    SpaceMismatch,
    #[error("mesh must contain only level-0 elements")]
    NotLevelZero,
    #[error("geometric-information matrix is singular at vertex {0}")]
    SingularGeometricInfo(usize),
    #[error("coefficient count {got} does not match space dimension {want} x {dim}")]
    CoefficientCount { got: usize, want: usize, dim: usize },
}

/// Errors raised by geometry evaluation.
#[derive(Debug, Error)]
pub enum GeomError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("surface is degenerate at ({0}, {1}): |S_s x S_t| < 1e-12")]
    DegenerateSurface(f64, f64),
    #[error("shell map Jacobian is singular at ({0}, {1}, {2})")]
    SingularJacobian(f64, f64, f64),
}

/// Errors raised by analysis and optimization.
#[derive(Debug, Error)]
pub enum FeaError {
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("system has loads but no constraints; stiffness matrix is singular")]
    Unconstrained,
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("solver residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("compliance cross-check failed: sum_e Ue'KeUe = {a:e}, U'F = {b:e}")]
    ComplianceMismatch { a: f64, b: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}
