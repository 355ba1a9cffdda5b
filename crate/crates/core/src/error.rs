use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("metric is singular at this point (reciprocal condition number {rcond:e})")]
    SingularMetric { rcond: f64 },
    #[error("form degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("wedge degree {degree} exceeds chart dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("chart dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("form is not Killing-Yano: residual {residual:e} above tolerance {tolerance:e}")]
    NotKilling { residual: f64, tolerance: f64 },
    #[error("p={p} and q={q} are not coprime")]
    NotCoprime { p: u32, q: u32 },
    #[error("need 0 < q < p, got p={p}, q={q}")]
    OutOfRange { p: u32, q: u32 },
    #[error("point outside the coordinate chart: {0}")]
    OutOfChart(String),
    #[error("nonpositive log argument <v_{facet}, y> = {value:e}")]
    DomainError { facet: usize, value: f64 },
    #[error("Newton inversion of the Legendre map diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("sin(theta) = {sin_theta:e} too close to a pole")]
    PoleSingularity { sin_theta: f64 },
    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
