use loctime_core::Error as CoreError;
use serde::Serialize;

/// Failures of a run, each with its own process exit status.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Core(CoreError),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECKS_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NON_IRREDUCIBLE: i32 = 3;
    pub const NOT_SYMMETRIC: i32 = 4;
    pub const BUDGET_EXCEEDED: i32 = 5;
    /// Model or data unsuitable for the experiment, such as a kernel that
    /// is not PSD.
    pub const UNSUPPORTED: i32 = 6;
    pub const IO: i32 = 7;
}

/// Machine-readable error record written to `summary.json` and stderr.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub exit_code: i32,
    pub field: Option<String>,
    pub message: String,
}

impl RunError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        RunError::Config { field: field.to_string(), message: message.into() }
    }

    /// Core error with any `Config` field qualified by `prefix`.
    pub fn prefixed(e: CoreError, prefix: &str) -> Self {
        match e {
            CoreError::Config { field, message } => RunError::Config { field: format!("{prefix}.{field}"), message },
            other => RunError::Core(other),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        RunError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config { .. } | RunError::Core(CoreError::Config { .. }) => "ConfigError",
            RunError::Core(CoreError::NonIrreducible { .. }) => "NonIrreducible",
            RunError::Core(CoreError::NotSymmetric { .. }) => "NotSymmetric",
            RunError::Core(CoreError::BudgetExceeded { .. }) => "BudgetExceeded",
            RunError::Core(CoreError::InvalidState(_)) => "ConfigError",
            RunError::Core(CoreError::SingularSystem) => "SingularSystem",
            RunError::Core(CoreError::NegativeSquare { .. }) => "NegativeSquare",
            RunError::Core(CoreError::NotPsd { .. }) => "NotPsd",
            RunError::Core(CoreError::OutOfRange { .. }) => "OutOfRange",
            RunError::Core(CoreError::InsufficientData { .. }) => "InsufficientData",
            RunError::Core(CoreError::UnsupportedMeasure(_)) => "UnsupportedMeasure",
            RunError::Core(CoreError::NotTranslationInvariant { .. }) => "NotTranslationInvariant",
            RunError::Io { .. } => "Io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "ConfigError" => exit::CONFIG,
            "NonIrreducible" => exit::NON_IRREDUCIBLE,
            "NotSymmetric" => exit::NOT_SYMMETRIC,
            "BudgetExceeded" => exit::BUDGET_EXCEEDED,
            "Io" => exit::IO,
            _ => exit::UNSUPPORTED,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let field = match self {
            RunError::Config { field, .. } | RunError::Core(CoreError::Config { field, .. }) => Some(field.clone()),
            _ => None,
        };
        ErrorRecord { kind: self.kind(), exit_code: self.exit_code(), field, message: self.to_string() }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Core(e)
    }
}
