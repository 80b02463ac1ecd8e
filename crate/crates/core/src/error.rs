use thiserror::Error;

use crate::model::ValidationReport;
use crate::staffing::InfeasibilityReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid project:\n{0}")]
    InvalidProject(ValidationReport),

    #[error("{0}")]
    Infeasible(InfeasibilityReport),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("illegal decision: {0}")]
    IllegalDecision(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error("unsupported schema version {0}")]
    SchemaVersion(u64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
