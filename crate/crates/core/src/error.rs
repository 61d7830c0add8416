use thiserror::Error;

/// Errors raised across the library. Check failures are not errors: they are
/// reported through [`crate::verify::CheckReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty region: {0}")]
    EmptyRegion(String),

    #[error("{method} did not converge after {iterations} iterations (last residual {last_residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        last_residual: f64,
        trace: Vec<f64>,
    },

    #[error("iterate lost positivity (min value {min_value:e}); try a different initial amplitude")]
    LostPositivity { min_value: f64 },

    #[error("no positive solution bracketed for shooting parameter in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("implicit function neighborhood exceeded at |y'| = {radius:e} (dF/dy_N = {derivative:e})")]
    ImplicitNeighborhood { radius: f64, derivative: f64 },

    #[error("exterior sphere condition fails at ({x}, {y}): penetration depth {depth:e}")]
    ExteriorSphere { x: f64, y: f64, depth: f64 },

    #[error("degenerate cap: {0}")]
    DegenerateCap(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("linear solver failure: {0}")]
    LinearSolve(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag, used by the CLI's JSON error object.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::EmptyRegion(_) => "empty_region",
            Error::NoConvergence { .. } => "no_convergence",
            Error::LostPositivity { .. } => "lost_positivity",
            Error::NoBracket { .. } => "no_bracket",
            Error::ImplicitNeighborhood { .. } => "implicit_neighborhood",
            Error::ExteriorSphere { .. } => "exterior_sphere",
            Error::DegenerateCap(_) => "degenerate_cap",
            Error::NonFinite(_) => "non_finite",
            Error::LinearSolve(_) => "linear_solve",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
        }
    }
}
