use thiserror::Error;

use crate::model::ValidationReport;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("network is invalid:\n{0}")]
    InvalidNetwork(ValidationReport),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("{context}: matrix has {got} columns, expected {expected}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("non-finite expression value for gene '{gene}' in sample '{sample}'")]
    NonFiniteValue { gene: String, sample: String },

    #[error("duplicate identifier '{0}'")]
    DuplicateId(String),

    #[error("expression matrix does not match network genes; missing: [{}], extra: [{}]",
        missing.join(", "), extra.join(", "))]
    GeneMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("identifiers of '{context}' do not agree between inputs")]
    IdMismatch { context: String },

    #[error("variable cardinality must be at least 2, got {0}")]
    BadCardinality(usize),

    #[error("factor '{factor}': {reason}")]
    BadFactor { factor: String, reason: String },

    #[error("zero belief normalizer at variable '{variable}': the model assigns zero probability to every state consistent with the evidence")]
    ZeroBelief { variable: String },

    #[error("inference failed for sample '{sample}': {source}")]
    SampleInference {
        sample: String,
        #[source]
        source: Box<Error>,
    },

    #[error("instance too large to enumerate: {configurations:.3e} joint configurations exceed the limit of {limit:.1e}")]
    TooLargeToEnumerate { configurations: f64, limit: f64 },

    #[error("ground truth contains no positive pair; recall is undefined")]
    NoPositives,

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
