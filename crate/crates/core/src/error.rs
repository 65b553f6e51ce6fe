use thiserror::Error;

use crate::time::GridTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("report {report} is not on the reporting grid")]
    OffGridReport { report: GridTime },

    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),

    #[error("agent {agent} has no admissible report against {opponent_report}")]
    NoAdmissibleReport {
        agent: u8,
        opponent_report: GridTime,
    },

    #[error("no feasible allocation fits the separation constraint")]
    NoFeasibleAllocation,

    #[error("equilibrium set is empty")]
    EmptyEquilibriumSet,

    #[error("scenario has no conflict of interest")]
    NoConflict,

    #[error("theorem premise does not hold: {0}")]
    PremiseViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;
