use thiserror::Error;

/// Errors surfaced by the scenario layer. All of them map to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("scenario {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("unknown builtin scenario '{name}'; registered: {}", available.join(", "))]
    UnknownBuiltin { name: String, available: Vec<String> },

    #[error("unknown fuzz suite '{name}'; registered: {}", available.join(", "))]
    UnknownSuite { name: String, available: Vec<String> },

    #[error("estimated cost {estimate:.3e} flops exceeds the budget {budget:.3e} (set QDINI_BUDGET to raise it)")]
    Budget { estimate: f64, budget: f64 },

    #[error("check '{label}': {source}")]
    Check {
        label: String,
        #[source]
        source: qdini_core::Error,
    },

    #[error(transparent)]
    Core(#[from] qdini_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
