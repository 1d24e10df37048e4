use alloc::string::String;

/// Failures raised by model construction, exact computations and experiments.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("rate graph is not strongly connected: state {unreachable} is not reachable from state {from}")]
    NonIrreducible { from: usize, unreachable: usize },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("unknown state {0}")]
    InvalidState(usize),

    #[error("negative squared distance {value:e} between states {x} and {y}")]
    NegativeSquare { x: usize, y: usize, value: f64 },

    #[error("kernel is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("event budget of {budget} exhausted before the stop rule fired")]
    BudgetExceeded { budget: u64 },

    #[error("time {t} lies beyond the path horizon {horizon}")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("insufficient data: {have} samples, need at least {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("measure gives zero mass to state {0}; entropy profile is infinite")]
    UnsupportedMeasure(usize),

    #[error("model is not translation invariant (violation {violation:e})")]
    NotTranslationInvariant { violation: f64 },

    #[error("model is not reversible with respect to its invariant measure (violation {violation:e})")]
    NotSymmetric { violation: f64 },
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
