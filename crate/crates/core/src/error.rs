//! Error type shared by every module of the crate.

use std::fmt;

/// Constraint families of the secure precoding problem, used to report
/// which part of an infeasible instance carries the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintFamily {
    Qos,
    NodePower,
    Eavesdropper(usize),
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintFamily::Qos => write!(f, "qos"),
            ConstraintFamily::NodePower => write!(f, "per-node-power"),
            ConstraintFamily::Eavesdropper(q) => write!(f, "eavesdropper-{q}"),
        }
    }
}

/// Iterate state reported when the interior-point solver gives up.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub relative_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("requested rank {requested} exceeds numerical rank {available}")]
    DegenerateRank { requested: usize, available: usize },

    #[error("{groups} groups do not divide {nodes} nodes evenly")]
    UnequalGroups { nodes: usize, groups: usize },

    #[error("Vandermonde system is rank deficient at column {k}")]
    RankDeficient { k: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("precoding problem infeasible; certificate concentrated on {}", families_str(.families))]
    Infeasible { families: Vec<ConstraintFamily> },

    #[error("interior-point solver did not converge after {} iterations (gap {:.3e}, pinf {:.3e}, dinf {:.3e})",
        .0.iterations, .0.relative_gap, .0.primal_infeasibility, .0.dual_infeasibility)]
    NotConverged(SolverDiagnostics),

    #[error("no feasible candidate among {candidates} draws (relaxation lower bound {lower_bound:.6e} W)")]
    RoundingFailed { lower_bound: f64, candidates: usize },

    #[error("degenerate beamforming problem: {0}")]
    Degenerate(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn families_str(families: &[ConstraintFamily]) -> String {
    families.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
