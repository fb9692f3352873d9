//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("source of the outer jet does not match the target of the inner jet")]
    SourceTargetMismatch,
    #[error("jet order mismatch: {0}")]
    OrderMismatch(String),
    #[error("tangent vector base point does not match the jet source")]
    BaseMismatch,
    #[error("linear part is singular (reciprocal condition number {rcond:e})")]
    SingularLinearPart { rcond: f64 },
    #[error("finite-difference step {h:e} is too small for order {order}")]
    StepTooSmall { h: f64, order: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("not a diffeomorphism: min derivative {min_derivative:e}")]
    NotADiffeomorphism { min_derivative: f64 },
    #[error("inverse failed to converge: {0}")]
    NotInvertible(String),
    #[error("flow diverged: {0}")]
    FlowDiverged(String),
    #[error("integrator step rejected: {0}")]
    StepRejected(String),
    #[error("insufficient modes above the noise floor for a decay fit ({usable} usable)")]
    InsufficientModes { usable: usize },
    #[error("inertia operator is singular or not positive definite: {0}")]
    SingularInertia(String),
    #[error("blow-up: norm {norm:e} exceeded ceiling {ceiling:e} at t = {t}")]
    BlowUp { t: f64, norm: f64, ceiling: f64 },
    #[error("chart boundary reached: {0}")]
    ChartBoundary(String),
    #[error("boundary value solver did not converge (endpoint error {endpoint_error:e}, energy {energy})")]
    NotConverged { endpoint_error: f64, energy: f64 },
    #[error("stencil leaves the chart domain at {0:?}")]
    DomainBoundary(Vec<f64>),
    #[error("degenerate plane: area element {0:e}")]
    DegeneratePlane(f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
