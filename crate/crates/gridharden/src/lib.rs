//! Proactive hardening planner for radial power distribution networks.
//!
//! The planning problem is a trilevel min-max-min: choose which lines and
//! DGs to harden (first stage), against the worst admissible contingency
//! (second stage, where hardening removes contingencies from the
//! uncertainty set), with a scenario-based expected load-shedding
//! dispatch as recourse (third stage). Three engines solve it exactly:
//!
//! * [`pccg`] — parametric column-and-constraint generation, optionally
//!   enhanced with resilience importance indices,
//! * [`baseline`] — basic C&CG over the static N-k set with a
//!   damage-overriding map,
//! * [`oracle`] — brute-force enumeration for desk-scale instances.

pub mod backend;
pub mod baseline;
pub mod ddu;
pub mod fixtures;
pub mod io;
pub mod model;
pub mod oracle;
pub mod pccg;
pub mod recourse;

use thiserror::Error;

/// Crate-level error for everything past data validation.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Backend(#[from] backend::BackendError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error("recourse LP for scenario {scenario} ended with status {status:?}")]
    ScenarioSolve {
        scenario: usize,
        status: backend::SolveStatus,
    },
    #[error("dual audit failed: {0}")]
    DualAudit(String),
    #[error("dual bound too small: subproblem audit kept failing after {retries} doublings of M_dual")]
    DualBoundTooSmall { retries: usize },
    #[error("master problem not solved to proven optimality (status {status:?})")]
    MasterNotOptimal { status: backend::SolveStatus },
    #[error("worst-case subproblem not solved to proven optimality (status {status:?})")]
    SubproblemNotOptimal { status: backend::SolveStatus },
    #[error("lower bound regressed at iteration {iter}: {prev} -> {curr}")]
    LowerBoundRegression { iter: usize, prev: f64, curr: f64 },
    #[error("{what} too large for exhaustive solve: {count} > cap {cap}")]
    OracleCap { what: &'static str, count: u128, cap: u128 },
    #[error("worst-case selection LP returned a fractional vertex (deviation {0:.3e})")]
    FractionalVertex(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
