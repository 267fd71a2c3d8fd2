use thiserror::Error;

/// Errors raised by the numerical pipeline and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("bodies {i} and {j} collide at t = {time} (separation {distance:e})")]
    Collision {
        time: f64,
        i: usize,
        j: usize,
        distance: f64,
    },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate loop: {0}")]
    Rank(String),

    #[error("bracket order {0} outside supported range 3..=6")]
    BracketOrder(usize),

    #[error("Newton iteration did not converge after {iterations} iterations (gradient norm {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Newton matrix: {0}")]
    Singular(String),

    #[error("irrep classification failed: measured signature {0}")]
    Classification(String),

    #[error("trivial-mode identification failed: found {found} of 4 trivial modes")]
    TrivialModes { found: usize },

    #[error("continuation step collapsed below {min_step:e} at parameter {param}")]
    StepCollapse { param: f64, min_step: f64 },

    #[error("bisection failed in bracket [{lo}, {hi}]: {reason}")]
    Bisection { lo: f64, hi: f64, reason: String },

    #[error("eigen-solver failure: {0}")]
    Eigen(String),

    #[error("order escalation: leading coefficient {coefficient:e} is below tolerance")]
    OrderEscalation { coefficient: f64 },

    #[error("unsupported option: {0}")]
    Unsupported(String),

    #[error("no bifurcated branch: {0}")]
    NoBranch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
