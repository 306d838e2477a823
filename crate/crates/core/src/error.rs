use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("no positive co-existence state for these parameters")]
    NoCoexistenceState,

    #[error("eigenvalue computation did not converge")]
    EigenSolveFailure,

    #[error("kinetic integration left the admissible region at t = {t}: {detail}")]
    StepSize { t: f64, detail: String },

    #[error("could not bracket the corner point: {0}")]
    RootBracket(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("solution blew up at t = {t} (|value| = {value})")]
    BlowUp { t: f64, value: f64 },

    #[error("not enough samples for a speed fit: {have} retained, {need} required")]
    InsufficientData { have: usize, need: usize },

    #[error("no front detected")]
    NoFront,

    #[error("front at x = {front} is within {margin} of the right boundary x = {x_max}")]
    FrontNearBoundary { front: f64, margin: f64, x_max: f64 },

    #[error("Newton iteration failed after {iterations} iterations (residual {residual:e}): {reason}")]
    NewtonDivergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("converged profile is not positive: {component} = {value:e} at z = {z}")]
    NonPositiveProfile {
        component: &'static str,
        value: f64,
        z: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that mean "the theory does not apply here" rather than
    /// a malfunction.
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(self, Error::HypothesisViolated(_) | Error::NoCoexistenceState)
    }
}
