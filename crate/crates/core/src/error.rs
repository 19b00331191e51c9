//! Error type shared across the crate.

use thiserror::Error;

use crate::game_graph::StrategyId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite payoff entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("payoff matrix must have at least one strategy")]
    EmptyMatrix,

    #[error("ragged or mis-sized matrix: expected {expected} entries, got {got}")]
    BadDimensions { expected: usize, got: usize },

    #[error("preference graph requires at least 2 strategies, got {n}")]
    PreferenceUndefined { n: usize },

    #[error("order is not a permutation of the node ids 0..{n}")]
    NotAPermutation { n: usize },

    #[error("mixture weights off the probability simplex (sum {sum:e})")]
    WeightsOffSimplex { sum: f64 },

    #[error("negative mixture weight at index {index}")]
    NegativeWeight { index: usize },

    #[error("degenerate game graph: all off-diagonal weights are zero")]
    DegenerateGraph,

    #[error("fixed-point iteration did not converge in {iterations} rounds (residual {residual:e})")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("pagerank score at index {index} must be positive to invert")]
    NonPositiveScore { index: usize },

    #[error("exact Shapley enumeration capped at n = {max}, got n = {n}")]
    TooManyStrategies { n: usize, max: usize },

    #[error("no visit count recorded for strategy {id}")]
    MissingVisitCount { id: StrategyId },

    #[error("cannot sample: all scores are zero")]
    ZeroScores,

    #[error("strategy shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("off-convention payoff {off_payoff} must be below the smallest convention payoff {min_convention}")]
    BadConvention { off_payoff: f64, min_convention: f64 },

    #[error("probability vector sums to {sum:e}, expected 1 within {tol:e}")]
    OffSimplex { sum: f64, tol: f64 },

    #[error("non-finite gradient during best-response training")]
    NonFiniteGradient,

    #[error("population is empty")]
    EmptyPopulation,

    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("need at least 2 generation records, got {got}")]
    TraceTooShort { got: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("trace record: {0}")]
    TraceJson(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
