use thiserror::Error;

use crate::game::ValidationReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid game:\n{0}")]
    Invalid(ValidationReport),
    #[error("malformed game description: {0}")]
    Json(#[from] serde_json::Error),
    #[error("games differ in structure: {0}")]
    StructureMismatch(String),
    #[error("normalization degenerate: value is identically 0")]
    DegenerateNormalization,
    #[error("interval bounds out of order: {0} > {1}")]
    InvertedInterval(String, String),
    #[error("state {0} does not exist")]
    UnknownState(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixGameError {
    #[error("payoff matrix must have at least one row and one column")]
    Empty,
    #[error("payoff matrix rows have unequal lengths")]
    Ragged,
    #[error("strategy has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("discount factor must lie strictly between 0 and 1, got {0}")]
    InvalidBeta(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(String),
    #[error("reward span must be nonnegative, got {0}")]
    InvalidSpan(String),
    #[error("valuation has length {got}, game has {expected} states")]
    ValuationLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("strategy does not fit the game: {0}")]
    StrategyMismatch(String),
    #[error("state {0} does not exist")]
    InvalidState(usize),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("cannot rationalize symbolic coefficients")]
    SymbolicRationalize,
    #[error("cannot export symbolic coefficients")]
    SymbolicExport,
    #[error("sentence has free variables: {0:?}")]
    FreeVariables(Vec<String>),
    #[error("state {0} does not exist")]
    UnknownState(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("game is not normalized: rewards must lie in [0, 1]")]
    NotNormalized,
    #[error("beta schedule must be nonempty")]
    EmptySchedule,
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error("epsilon must satisfy {0}, got {1}")]
    InvalidEpsilon(&'static str, String),
    #[error("the export-only backend produces sentences, not verdicts")]
    ExportBackend,
    #[error("state {0} does not exist")]
    UnknownState(usize),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}
