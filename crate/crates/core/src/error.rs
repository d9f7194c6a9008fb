use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cycle detected: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("node `{0}` appears in more than one of the query sets")]
    OverlappingSets(String),

    #[error("column `{0}` is empty")]
    EmptyColumn(String),
    #[error("column `{0}` is continuous; discretize it before testing")]
    ContinuousColumn(String),
    #[error("column `{0}` has missing values")]
    MissingValues(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("missing columns: {}", .0.join(", "))]
    MissingColumn(Vec<String>),
    #[error("column `{0}` is not binary")]
    NonBinary(String),
    #[error("invalid degrees of freedom: {0}")]
    InvalidDof(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("arm T={arm} has no rows (treated: {treated}, control: {control})")]
    EmptyArm {
        arm: u8,
        treated: usize,
        control: usize,
    },

    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("probability row for `{node}` at parent configuration {config:?} sums to {sum}")]
    RowSumViolation {
        node: String,
        config: Vec<usize>,
        sum: f64,
    },
    #[error("missing probability row for `{node}` at parent configuration {config:?}")]
    MissingCptRow { node: String, config: Vec<usize> },
    #[error("treatment `{t}` is not a parent of `{y}`")]
    TNotParent { t: String, y: String },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("control group is empty")]
    EmptyControl,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid fold count k={k} for n={n}")]
    InvalidK { n: usize, k: usize },

    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
    #[error("unsupported model format version {0}")]
    ModelVersion(u32),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
