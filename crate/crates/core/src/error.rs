use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("position {x} lies outside [0, 1]")]
    Domain { x: f64 },

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("spectral parameter must be positive, got {0}")]
    NonPositiveSpectral(f64),

    #[error("integrator step size underflow at x = {x}")]
    StepUnderflow { x: f64 },

    #[error("integrator exceeded {max_steps} steps near x = {x}")]
    TooManySteps { x: f64, max_steps: usize },

    #[error("integrator produced a non-finite state at x = {x}")]
    NonFinite { x: f64 },

    #[error("eigenvalue bracket for mode {n} not found within {cap} expansions")]
    BracketExpansion { n: usize, cap: usize },

    #[error("endpoint phase is not increasing in z on [{lo}, {hi}] for mode {n}")]
    NonMonotonePhase { n: usize, lo: f64, hi: f64 },

    #[error("mode index must be at least {min}, got {n}")]
    ModeIndex { n: usize, min: usize },

    #[error("mesh with {cells} cells cannot resolve {n_max} eigenvalues (need at least {required})")]
    MeshTooCoarse { cells: usize, n_max: usize, required: usize },

    #[error("root search exceeded its iteration cap: {0}")]
    RootCap(String),

    #[error("structural failure: {0}")]
    Structural(String),

    #[error("hypothesis violated: {what} at x = {x}")]
    Hypothesis { what: String, x: f64 },

    #[error("F(x, lambda) is too close to a pole at lambda = {lambda} (|h| = {h})")]
    PoleProximity { lambda: f64, h: f64 },

    #[error("position {x} is outside the integrated range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
}
