use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative input {value} at position {index}")]
    NegativeInput { index: usize, value: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("point lies outside the closed domain (excess distance {excess:e})")]
    OutsideDomain { excess: f64 },
    #[error("grid spacing {h} too coarse: {reason}")]
    GridTooCoarse { h: f64, reason: String },
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("linear solve failed: non-positive pivot {pivot:e} at row {row}")]
    LinearSolve { row: usize, pivot: f64 },
    #[error("non-finite value in solution at step {step}")]
    NonFinite { step: usize },
    #[error("fixed-point iteration stagnated at residual {residual:e} after {iterations} iterations")]
    Stagnation { iterations: usize, residual: f64 },
    #[error("ε-sweep lost monotone ordering: violation {violation:e} between ε={eps_small} and ε={eps_large}")]
    MonotonicityViolation {
        eps_small: f64,
        eps_large: f64,
        violation: f64,
    },
    #[error("solution vanishes at sampled point ρ={rho:e}; boundary exponent undefined")]
    VanishingSolution { rho: f64 },
    #[error("query outside the sampled cylinder: {0}")]
    OutsideCylinder(String),
    #[error("no sign change in bracket [{lo}, {hi}]: check {detail}")]
    NoSignChange { lo: f64, hi: f64, detail: &'static str },
    #[error("empty sample set")]
    EmptySample,
    #[error("convex hull construction failed: {0}")]
    Hull(String),
}
