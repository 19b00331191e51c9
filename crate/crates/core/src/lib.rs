//! Open-ended cooperative meta-game learning engine.
//!
//! A population of strategies plays a two-player common-payoff game; the
//! pairwise payoffs form a complete weighted digraph whose argmax out-edges
//! (the preference graph) expose which strategies the rest of the population
//! wants to partner with. Each generation, a solver turns the graph into an
//! incompatibility distribution over strategies that coordinate poorly, a
//! bandit-style sampler draws training partners from it, and a best-response
//! oracle trains one new strategy that the population should prefer. The
//! numeric core is generic over the scalar type; `f64` and `f32` aliases
//! live at the crate root.

// Matrix arithmetic reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod config;
pub mod csv;
pub mod engine;
pub mod env;
pub mod error;
pub mod game_graph;
pub mod monitor;
pub mod oracle;
pub mod sampler;
pub mod scalar;
pub mod seeds;
pub mod solver;

pub use error::{Error, Result};
pub use game_graph::StrategyId;
pub use scalar::Scalar;

pub type PayoffMatrix64 = game_graph::PayoffMatrix<f64>;
pub type PayoffMatrix32 = game_graph::PayoffMatrix<f32>;
pub type GameGraph64 = game_graph::GameGraph<f64>;
pub type GameGraph32 = game_graph::GameGraph<f32>;
pub type CentralityReport64 = game_graph::CentralityReport<f64>;
pub type CentralityReport32 = game_graph::CentralityReport<f32>;
pub type StageGame64 = env::StageGame<f64>;
pub type StageGame32 = env::StageGame<f32>;
pub type Strategy64 = env::Strategy<f64>;
pub type Strategy32 = env::Strategy<f32>;
pub type OracleConfig64 = oracle::OracleConfig<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type IncompatibilityDistribution64 = solver::IncompatibilityDistribution<f64>;
