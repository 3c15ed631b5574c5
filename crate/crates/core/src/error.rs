use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("optimization failed on parameter `{param}`: {reason}")]
    Optimization { param: String, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("imputation error: variable `{0}` never observed in the training split")]
    Imputation(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("fold error: {0}")]
    Fold(String),

    #[error("numerical rank error: {0}")]
    NumericalRank(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("stage `{stage}` requires missing artifact {}", missing.display())]
    Dependency { stage: String, missing: PathBuf },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable category, used by the CLI for error reporting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Argument(_) => "argument",
            Error::Optimization { .. } => "optimization",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Contract(_) => "contract",
            Error::Schema(_) => "schema",
            Error::Imputation(_) => "imputation",
            Error::Training(_) => "training",
            Error::Metric(_) => "metric",
            Error::Fold(_) => "fold",
            Error::NumericalRank(_) => "numerical_rank",
            Error::Data(_) => "data",
            Error::Degenerate(_) => "degenerate",
            Error::Dependency { .. } => "dependency",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code for the category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Argument(_) => 2,
            Error::Dependency { .. } => 3,
            Error::Io { .. } => 4,
            Error::Parse { .. } | Error::Schema(_) | Error::Data(_) => 5,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
