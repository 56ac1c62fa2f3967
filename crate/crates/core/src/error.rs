use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown problem `{name}` (registered: {})", registered.join(", "))]
    UnknownProblem { name: String, registered: Vec<String> },

    #[error("problem `{name}` does not support dimension {dim}")]
    UnsupportedDimension { name: String, dim: usize },

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("expression error at offset {pos}: {msg}")]
    Expression { pos: usize, msg: String },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("retained dimension {retained} outside [1, {dim}]")]
    RetainedDims { retained: usize, dim: usize },

    #[error("operator needs a population of at least {needed}, got {got}")]
    PopulationTooSmall { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("rank tables cover different {0}")]
    CoverageMismatch(String),

    #[error("run was recorded without trajectory checkpoints")]
    NoTrajectory,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
