use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid robot parameter: {0}")]
    InvalidParameter(String),
    #[error("state has {got} components, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Reasons a solver returns without a solution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("time limit exceeded")]
    Timeout,
    #[error("could not connect start and goal of robot {robot}")]
    InitFailure { robot: usize },
    /// Frozen roadmaps were searched completely without finding a solution.
    #[error("search space exhausted")]
    Exhausted,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no valid instance after {rounds} rejection rounds")]
    GenerationFailure { rounds: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}
