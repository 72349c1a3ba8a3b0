use std::fmt;

use serde::{Deserialize, Serialize};

use crate::admm::TraceRecord;
use crate::model::{Allocation, ModeAssignment};
use crate::scalar::Scalar;

/// Which solver produced a [`SolveReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Admm,
    Optimal,
    OffloadOnly,
    LocalOnly,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Admm => "admm",
            Method::Optimal => "optimal",
            Method::OffloadOnly => "offload-only",
            Method::LocalOnly => "local-only",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Allocation returned by the ADMM iterations themselves, before polishing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSolution<T: Scalar = f64> {
    pub objective: T,
    pub allocation: Allocation<T>,
}

/// Outcome of any solver.
///
/// `objective` is the weighted sum computation rate (bits/s) of `modes` under
/// `allocation`. For the exact solvers `iterations` counts the mode sets
/// evaluated; for ADMM it counts outer iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T: Scalar = f64> {
    pub method: Method,
    pub objective: T,
    pub modes: ModeAssignment,
    pub allocation: Allocation<T>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admm_raw: Option<RawSolution<T>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRecord<T>>,
}
