use thiserror::Error;

/// Errors raised by the solver suite.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid parameters: {0}")]
    InvalidGrid(String),
    #[error("time step {dt} violates the stability bound {bound} (cfl = {cfl})")]
    StabilityBound { dt: f64, bound: f64, cfl: f64 },
    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate director at cell {cell}: norm {norm} < 0.5 (reduce dt)")]
    DegenerateDirector { cell: usize, norm: f64 },
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("step {step} failed: {source}")]
    StepFailed { step: usize, source: Box<Error> },
    #[error("invalid boundary control: {0}")]
    InvalidControl(String),
    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),
    #[error("invalid targets: {0}")]
    InvalidTargets(String),
    #[error("invalid cost weights: {0}")]
    InvalidWeights(String),
    #[error("stereographic chart undefined at the south pole")]
    SouthPole,
    #[error("time-level-0 row has chart norm {norm} > M = {radius}")]
    InfeasibleBase { norm: f64, radius: f64 },
    #[error("line search stalled after {backtracks} backtracks at iteration {iter}")]
    LineSearchStall { iter: usize, backtracks: usize },
    #[error("invalid optimizer configuration: {0}")]
    InvalidOptimizeConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
