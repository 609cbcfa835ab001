use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("infeasible rasterization: {entity} falls in an occupied cell")]
    InfeasibleRasterization { entity: String },

    #[error("unreachable goal after exploring {explored} nodes")]
    UnreachableGoal { explored: usize },

    #[error("goal not reached within K_max = {max_steps} steps")]
    GoalNotReached { steps: usize, max_steps: usize },

    #[error("rrt budget exceeded: {iterations} iterations, tree size {tree_size}")]
    RrtBudgetExceeded { iterations: usize, tree_size: usize },

    #[error("infeasible margin: {endpoint} lies within the inflated box of obstacle #{obstacle}")]
    InfeasibleMargin { endpoint: String, obstacle: usize },

    #[error("unparseable plan: found {found} waypoint(s) in response {raw:?}")]
    UnparseablePlan { found: usize, raw: String },

    #[error("implausible plan: first waypoint is {distance:.2} m from the start")]
    ImplausiblePlan { distance: f64 },

    #[error("endpoint unavailable after {attempts} attempt(s): {last_error}")]
    EndpointUnavailable { attempts: usize, last_error: String },

    #[error("no speed calibration for {hz} Hz; set max_speed explicitly")]
    UnlistedRate { hz: u32 },

    #[error("unsatisfiable sample: entry seed {seed} failed {attempts} attempts")]
    UnsatisfiableSample { seed: u64, attempts: usize },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// True for input/config problems, as opposed to planning failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Contract(_)
                | Error::Range(_)
                | Error::Io { .. }
                | Error::Json(_)
                | Error::Parse { .. }
                | Error::UnlistedRate { .. }
        )
    }
}
