//! One-shot zero-sum matrix games, solved exactly.

use num_traits::{One, Zero};

use crate::error::MatrixGameError;
use crate::ratio::Rational;
use crate::simplex;

/// A payoff matrix; the row player maximizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixGame {
    payoff: Vec<Vec<Rational>>,
}

impl MatrixGame {
    pub fn new(payoff: Vec<Vec<Rational>>) -> Result<Self, MatrixGameError> {
        if payoff.is_empty() || payoff[0].is_empty() {
            return Err(MatrixGameError::Empty);
        }
        let cols = payoff[0].len();
        if payoff.iter().any(|row| row.len() != cols) {
            return Err(MatrixGameError::Ragged);
        }
        Ok(MatrixGame { payoff })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Result<Self, MatrixGameError> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| crate::ratio::int(v)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.payoff.len()
    }

    pub fn cols(&self) -> usize {
        self.payoff[0].len()
    }

    pub fn payoff(&self) -> &[Vec<Rational>] {
        &self.payoff
    }

    pub fn entry(&self, row: usize, col: usize) -> &Rational {
        &self.payoff[row][col]
    }

    /// `−Mᵀ`: the same game seen from the column player.
    pub fn transpose_negate(&self) -> MatrixGame {
        let payoff = (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| -&self.payoff[i][j]).collect())
            .collect();
        MatrixGame { payoff }
    }

    pub fn map(&self, f: impl Fn(&Rational) -> Rational) -> MatrixGame {
        MatrixGame {
            payoff: self
                .payoff
                .iter()
                .map(|row| row.iter().map(&f).collect())
                .collect(),
        }
    }

    pub fn solve(&self) -> MatrixGameSolution {
        solve_matrix_game(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixGameSolution {
    pub value: Rational,
    pub row_strategy: Vec<Rational>,
    pub col_strategy: Vec<Rational>,
}

impl MatrixGameSolution {
    /// Checks both exact saddle-point certificates against `mg`.
    pub fn certifies(&self, mg: &MatrixGame) -> bool {
        let dist = |v: &[Rational]| {
            v.iter().all(|p| *p >= Rational::zero()) && v.iter().sum::<Rational>().is_one()
        };
        dist(&self.row_strategy)
            && dist(&self.col_strategy)
            && best_response_value(mg, &self.row_strategy, Side::Row).as_ref() == Ok(&self.value)
            && best_response_value(mg, &self.col_strategy, Side::Col).as_ref() == Ok(&self.value)
    }
}

/// Which player a mixed strategy belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Player 1, the maximizer choosing rows.
    Row,
    /// Player 2, the minimizer choosing columns.
    Col,
}

pub fn solve_matrix_game(mg: &MatrixGame) -> MatrixGameSolution {
    let s = simplex::solve(&mg.payoff);
    MatrixGameSolution {
        value: s.value,
        row_strategy: s.row,
        col_strategy: s.col,
    }
}

/// Guaranteed payoff of a mixed strategy: `min_b x·M[·,b]` for the row
/// player, `max_a M[a,·]·y` for the column player.
pub fn best_response_value(mg: &MatrixGame, mixed: &[Rational], side: Side) -> Result<Rational, MatrixGameError> {
    match side {
        Side::Row => {
            if mixed.len() != mg.rows() {
                return Err(MatrixGameError::DimensionMismatch { expected: mg.rows(), got: mixed.len() });
            }
            let payoffs = (0..mg.cols()).map(|j| {
                (0..mg.rows())
                    .map(|i| &mixed[i] * &mg.payoff[i][j])
                    .sum::<Rational>()
            });
            Ok(payoffs.min().expect("non-empty"))
        }
        Side::Col => {
            if mixed.len() != mg.cols() {
                return Err(MatrixGameError::DimensionMismatch { expected: mg.cols(), got: mixed.len() });
            }
            let payoffs = mg.payoff.iter().map(|row| {
                row.iter().zip(mixed).map(|(a, y)| a * y).sum::<Rational>()
            });
            Ok(payoffs.max().expect("non-empty"))
        }
    }
}

/// Float solve used by the numeric value iteration.
pub(crate) fn solve_f64(payoff: &[Vec<f64>]) -> (f64, Vec<f64>, Vec<f64>) {
    let s = simplex::solve(payoff);
    (s.value, s.row, s.col)
}
