use std::path::Path;

use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error(transparent)]
    Core(#[from] hitlab::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        CliError::ConfigInvalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid { .. } => "config-invalid",
            CliError::Core(e) => match e {
                hitlab::Error::BudgetExhausted { .. } => "budget-exhausted",
                hitlab::Error::RejectionStall { .. } => "rejection-stall",
                hitlab::Error::InvalidBeta { .. } => "invalid-beta",
                hitlab::Error::DegenerateLadder { .. } => "degenerate-ladder",
                hitlab::Error::DegenerateFit { .. } => "degenerate-fit",
                hitlab::Error::AllCensored => "all-censored",
                hitlab::Error::NoDecayFit => "no-decay-fit",
                _ => "invalid-input",
            },
            CliError::Io { .. } => "io",
            CliError::SchemaMismatch(_) => "schema-mismatch",
            CliError::Usage(_) => "usage",
        }
    }

    /// The record printed on stderr.
    pub fn to_json(&self) -> Value {
        let mut rec = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::ConfigInvalid { field, .. } = self {
            rec["field"] = json!(field);
        }
        json!({ "error": rec })
    }
}

/// Tags a core validation error with the config field it came from.
pub fn at<T>(field: &str, r: hitlab::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        hitlab::Error::BudgetExhausted { .. } | hitlab::Error::RejectionStall { .. } => CliError::Core(e),
        other => CliError::config(field, other.to_string()),
    })
}
