use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {value} outside [0, 1]")]
    InvalidProbability { value: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("state space too large: n = {n} exceeds the oracle limit of {max} nodes")]
    Capacity { n: usize, max: usize },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("bound ordering violated at node {node}, compartment {compartment}: lower {lower} > upper {upper}")]
    BoundsViolation {
        node: usize,
        compartment: char,
        lower: f64,
        upper: f64,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
