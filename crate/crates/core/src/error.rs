use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("star-shape floor violated: min(1 + xi) = {min:.4} < {floor}")]
    StarShapeViolation { min: f64, floor: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("eigensolver did not converge in {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("first eigenfunction has a negative vertex value {min:.3e}")]
    SignViolation { min: f64 },

    #[error("grid spacing {grid} exceeds half the mesh size {h}")]
    GridTooCoarse { grid: f64, h: f64 },

    #[error("domain area {area} exceeds the hard cap {vmax}")]
    HardCapViolation { area: f64, vmax: f64 },

    #[error("derivative is one-sided at the volume kink (below: {below}, above: {above})")]
    KinkAtConstraint { below: f64, above: f64 },

    #[error("inner domain is not contained in the outer domain")]
    NotNested,

    #[error("precondition failed: {0}")]
    Precondition(String),
}
