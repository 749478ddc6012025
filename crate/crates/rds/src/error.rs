use thiserror::Error;

#[derive(Debug, Error)]
pub enum RdsError {
    #[error("index {0} is outside the resolvable window of this sequence")]
    OutOfWindow(i64),
    #[error("digit index {0} exceeds the precision of the stored constant")]
    DigitPrecisionExhausted(usize),
    #[error("sequence lift failed at index {index}: {reason}")]
    LiftFailure { index: i64, reason: String },
    #[error("matrix dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular value gap between sigma_{l} and sigma_{l_next} is below 1e-10; the subspace is numerically undefined", l_next = .0 + 1, l = .0)]
    DegenerateSplitting(usize),
    #[error("map is not Markov for the given partition: branch {branch} does not send cell {cell} onto a union of cells")]
    MarkovViolation { branch: usize, cell: usize },
    #[error("function at path index {0} is identically zero")]
    DegenerateFunction(usize),
    #[error("g fails the zero-pushforward premise: residual {0}")]
    InvalidG(f64),
    #[error("cylinder branch count exceeded {0}; reduce the horizon")]
    HorizonTooLarge(usize),
    #[error("all samples escaped before step 3; increase the sample count")]
    InsufficientSurvival,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("prerequisite missing: {0}")]
    MissingPrerequisite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RdsError>;
