use thiserror::Error;

use crate::types::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid {what}: {}", join_violations(.violations))]
    Invalid {
        what: &'static str,
        violations: Vec<Violation>,
    },

    #[error("measure is not in the simplex: {0}")]
    NotInSimplex(String),

    #[error("measure charges transient states: {0}")]
    TransientMass(String),

    #[error("constrained transport problem is infeasible")]
    Infeasible,

    #[error("plan violates the restriction: {0}")]
    NotFeasible(String),

    #[error("marginal mismatch: {0}")]
    MarginalMismatch(String),

    #[error("restriction carries no product action or product kernel")]
    MissingProductStructure,

    #[error("subgroup projection does not generate the acting group: {0}")]
    ProjectionNotFull(String),

    #[error("kernel fails the ergodic decomposition check at rows {0:?}")]
    NotErgodicKernel(Vec<usize>),

    #[error("restriction is not geometric: {0}")]
    NotGeometric(String),

    #[error("enumeration refused: {needed} candidates exceed cap {cap}")]
    CapExceeded { needed: u128, cap: usize },

    #[error("permutation group exceeds {0} elements")]
    GroupTooLarge(usize),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("{0}")]
    Parse(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
