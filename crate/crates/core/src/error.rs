use thiserror::Error;

use crate::models::ConditionReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("argument {name} = {value} is outside the domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("growth condition {item} not met")]
    ConditionNotMet {
        item: &'static str,
        report: Box<ConditionReport>,
    },
    #[error("no T with G(T) > λT²/2 found below s_max = {s_max:e}")]
    TNotFound { s_max: f64 },
    #[error("step size underflow at r = {r:e} (v0 = {v0:e})")]
    StepSizeUnderflow { r: f64, v0: f64 },
    #[error("non-finite state at r = {r:e} (v0 = {v0:e})")]
    NonFiniteState { r: f64, v0: f64 },
    #[error("integrator exceeded its step budget at r = {r:e}")]
    StepBudget { r: f64 },
    #[error("no overshoot/undershoot bracket found for λ = {lambda:e}")]
    BracketNotFound { lambda: f64 },
    #[error("tolerance not reached: {0}")]
    ToleranceNotReached(String),
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("branch point λ = {lambda:e} failed after retry: {cause}")]
    PointFailed { lambda: f64, cause: Box<Error> },
    #[error("no root of ρ(λ) = {c:e} in the traced branch ({verdict})")]
    NoRootInBranch { c: f64, verdict: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
