use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown model kind `{0}`")]
    UnknownModel(String),

    #[error("model kind {0} may appear only once in a sum")]
    DuplicateSingleton(String),

    #[error("SARIMA cannot be combined with other terms in a sum")]
    SarimaInSum,

    #[error("constraint violated for {term}.{param}: {reason}")]
    Constraint {
        term: String,
        param: String,
        reason: String,
    },

    #[error("model has no free parameters")]
    NoFreeParameters,

    #[error("parameter {0} has no value")]
    Unparameterized(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("unsupported integration: {0}")]
    UnsupportedIntegration(String),

    #[error("not enough scales: {scales} scales for {params} free parameters")]
    NotEnoughScales { scales: usize, params: usize },

    #[error("weight matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("every scale is degenerate (zero wavelet variance)")]
    AllScalesDegenerate,

    #[error("root finding did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("fit did not converge")]
    NotConverged,

    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapFailure { failed: usize, total: usize },

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("fixture `{name}` is corrupt: {reason}")]
    CorruptFixture { name: String, reason: String },
}

impl Error {
    pub(crate) fn constraint(term: &str, param: &str, reason: impl Into<String>) -> Self {
        Error::Constraint {
            term: term.to_string(),
            param: param.to_string(),
            reason: reason.into(),
        }
    }

    /// Whether the failure is numerical (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence(_)
                | Error::NotConverged
                | Error::BootstrapFailure { .. }
                | Error::NotPositiveDefinite
                | Error::AllScalesDegenerate
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
