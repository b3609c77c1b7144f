use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("catalog schema error in `{component}`: {message}")]
    CatalogSchema { component: String, message: String },

    #[error("catalog validation failed: {0}")]
    CatalogValidation(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("compositional split infeasible: {0}")]
    SplitInfeasible(String),

    #[error("format does not match task: {0}")]
    FormatMismatch(String),

    #[error("rendering failed: {0}")]
    Render(String),

    #[error("failed to load task from {path}: {message}")]
    TaskLoad { path: PathBuf, message: String },

    #[error("invalid task: {0}")]
    TaskValidation(String),

    #[error("unknown task id `{0}`")]
    UnknownTask(String),

    #[error("class-imbalance shift infeasible: {0}")]
    InfeasibleShift(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("backend capability missing: {0}")]
    Capability(String),

    #[error("backend error: {0}")]
    Backend(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
