//! Limit-average values of two-player zero-sum stochastic games.
//!
//! The pieces, bottom up:
//!
//! - [`game`]: the game model, validation, size metrics, reward
//!   normalization and the perturbation bound for approximate games.
//! - [`matrix_game`]: exact one-shot zero-sum games.
//! - [`discounted`]: discounted values via the Shapley operator.
//! - [`chain`]: exact and simulated payoffs of stationary strategy pairs.
//! - [`formula`]: first-order sentences over the reals stating that a value
//!   exceeds a threshold, with census metrics and SMT-LIB/JSON export.
//! - [`approx`]: binary search for the value over a threshold oracle.
//!
//! All game data is exact ([`Rational`]); floats appear only inside the
//! numeric value iteration, whose output is re-certified exactly.

pub mod approx;
pub mod chain;
pub mod discounted;
pub mod error;
pub mod formula;
pub mod game;
mod linalg;
pub mod matrix_game;
pub mod ratio;
mod simplex;
pub mod strategy;

pub use approx::{
    approximate_value, approximate_value_unnormalized, decide_threshold, vanishing_discount_estimate, Backend,
    IntervalResult, OracleConfig, ValueInterval, Verdict,
};
pub use chain::{induced_chain, long_run_average, long_run_averages, simulate_play, RewardChain, TraceStep};
pub use discounted::{discounted_value, shapley_operator, DiscountedSolution, Valuation};
pub use error::{ApproxError, ChainError, FormulaError, GameError, MatrixGameError, SolverError};
pub use formula::{census, rationalize, ExportFormat, Formula, FormulaCensus, Polynomial, Var};
pub use game::{
    denormalize_interval, normalize, perturbation_bound, size_metrics, validate_game, GameBuilder, GameDescription,
    NormalizationRecord, PerturbationBound, SizeMetrics, StochasticGame, ValidationReport,
};
pub use matrix_game::{best_response_value, solve_matrix_game, MatrixGame, MatrixGameSolution, Side};
pub use ratio::Rational;
pub use strategy::{Role, StationaryStrategy};
