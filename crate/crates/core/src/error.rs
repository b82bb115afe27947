use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    /// The active-set solver hit its iteration cap. `best` is the last
    /// feasible iterate.
    #[error("nnls did not converge after {iterations} iterations")]
    NnlsNotConverged { iterations: usize, best: Vec<f64> },

    #[error("activation component {component} is degenerate (Gram matrix not invertible)")]
    DegenerateActivations { component: usize },

    #[error("every component was pruned (all-zero activations)")]
    AllComponentsPruned,

    #[error("signature {component} has non-positive projection on the voltage ({projection:e})")]
    NormalizationImpossible { component: usize, projection: f64 },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("interval {requested} s is not a positive integer multiple of {base} s")]
    NotAMultiple { requested: f64, base: f64 },

    #[error("AR polynomial is not stationary")]
    NonStationary,

    #[error("transition matrix for subset {subset} is not stochastic")]
    NotStochastic { subset: usize },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}
