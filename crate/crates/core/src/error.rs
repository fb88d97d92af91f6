use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("feature {feature} ({name}): {message}")]
    Conformance {
        feature: usize,
        name: String,
        message: String,
    },

    #[error("expected {expected} feature values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("feature index {index} out of bounds for {len} features")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("counterfactual policy has no rule for feature {0}")]
    MissingRule(usize),

    #[error("invalid policy: {0}")]
    Policy(String),

    #[error("invalid decision rule: {0}")]
    Rule(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error(
        "irreducibility check infeasible: set of {size} features exceeds power-set bound {bound}"
    )]
    IrreducibilityInfeasible { size: usize, bound: usize },

    #[error("exact Shapley infeasible: {active} active features exceed the enumeration bound {bound}; use sampled attribution")]
    ShapleyInfeasible { active: usize, bound: usize },

    #[error("oracle infeasible: {candidates} candidate features exceed the limit {limit}")]
    OracleInfeasible { candidates: usize, limit: usize },

    #[error("set is not causal for this decision")]
    NotCausal,

    #[error("single-class target: every row has label {0}")]
    SingleClassTarget(f64),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },

    #[error("singular system in least-squares solve; use a positive l2 penalty")]
    Singular,

    #[error("{0}")]
    InvalidArgument(String),

    #[error("empty selection: {0}")]
    Empty(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("unsupported document version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("check failed: {metric}: {detail}")]
    Check { metric: String, detail: String },

    #[error("degenerate generated data after {attempts} attempts: {reason}")]
    Degenerate { attempts: usize, reason: String },
}
