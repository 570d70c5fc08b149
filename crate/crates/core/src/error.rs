use thiserror::Error;

use crate::model::ConfigViolation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("identifier universe must be non-empty and strictly increasing: {0}")]
    InvalidUniverse(String),

    #[error("unknown process id {0}")]
    UnknownId(u64),

    #[error("invalid configuration: {}", join_violations(.0))]
    InvalidConfiguration(Vec<ConfigViolation>),

    #[error("step {step} is not enabled: {reason}")]
    StepNotEnabled { step: String, reason: String },

    #[error("invalid generator input: {0}")]
    Generator(String),

    #[error("malformed trace at line {line}: {message}")]
    TraceParse { line: usize, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[ConfigViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
