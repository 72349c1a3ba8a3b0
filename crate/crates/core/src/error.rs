use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: String, reason: String },

    #[error("infeasible allocation: {constraint} (violation {violation:e})")]
    Infeasible { constraint: String, violation: f64 },

    #[error("root is not bracketed: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    Bracket { f_lo: f64, f_hi: f64 },

    #[error("no sign change found before the bracket cap {cap:e}")]
    Unbounded { cap: f64 },

    #[error("no convergence after {iterations} iterations (best iterate {best:e})")]
    NonConvergence { iterations: usize, best: f64 },

    #[error("enumeration over {n} devices exceeds the cap of {cap} devices")]
    Capacity { n: usize, cap: usize },

    #[error("subproblem for device {device} ({branch} branch) failed: {source}")]
    Subproblem {
        device: usize,
        branch: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario {context}: {source}")]
    Scenario {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
