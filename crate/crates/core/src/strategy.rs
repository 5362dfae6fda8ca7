use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::ChainError;
use crate::game::StochasticGame;
use crate::ratio::{self, Rational};

/// A memoryless strategy: one distribution per state over the positions of
/// that state's move set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StationaryStrategy {
    dists: Vec<Vec<Rational>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Max,
    Min,
}

impl StationaryStrategy {
    /// Checks that `dists` fits the move sets of `role` in `g` and that each
    /// entry is an exact distribution.
    pub fn new(g: &StochasticGame, role: Role, dists: Vec<Vec<Rational>>) -> Result<Self, ChainError> {
        if dists.len() != g.num_states() {
            return Err(ChainError::StrategyMismatch(format!(
                "{} distributions for {} states",
                dists.len(),
                g.num_states()
            )));
        }
        for (s, d) in dists.iter().enumerate() {
            let moves = match role {
                Role::Max => g.moves1(s).len(),
                Role::Min => g.moves2(s).len(),
            };
            if d.len() != moves {
                return Err(ChainError::StrategyMismatch(format!(
                    "state {} has {} moves, distribution has {} entries",
                    s + 1,
                    moves,
                    d.len()
                )));
            }
            if d.iter().any(|p| p.is_negative()) || !d.iter().sum::<Rational>().is_one() {
                return Err(ChainError::StrategyMismatch(format!(
                    "distribution at state {} is not a probability distribution",
                    s + 1
                )));
            }
        }
        Ok(StationaryStrategy { dists })
    }

    pub(crate) fn from_parts(dists: Vec<Vec<Rational>>) -> Self {
        StationaryStrategy { dists }
    }

    /// Plays the first listed move everywhere.
    pub fn first_moves(g: &StochasticGame, role: Role) -> Self {
        let dists = (0..g.num_states())
            .map(|s| {
                let len = match role {
                    Role::Max => g.moves1(s).len(),
                    Role::Min => g.moves2(s).len(),
                };
                let mut d = vec![Rational::zero(); len];
                d[0] = Rational::one();
                d
            })
            .collect();
        StationaryStrategy { dists }
    }

    pub fn at(&self, s: usize) -> &[Rational] {
        &self.dists[s]
    }

    pub fn dists(&self) -> &[Vec<Rational>] {
        &self.dists
    }

    /// Parses the strategy file format: one object per state mapping action
    /// names to probabilities; unlisted moves get probability 0.
    pub fn from_json(g: &StochasticGame, role: Role, text: &str) -> Result<Self, ChainError> {
        let file: StrategyFile =
            serde_json::from_str(text).map_err(|e| ChainError::StrategyMismatch(e.to_string()))?;
        if file.len() != g.num_states() {
            return Err(ChainError::StrategyMismatch(format!(
                "{} entries for {} states",
                file.len(),
                g.num_states()
            )));
        }
        let mut dists = Vec::with_capacity(file.len());
        for (s, entry) in file.iter().enumerate() {
            let moves = match role {
                Role::Max => g.moves1(s),
                Role::Min => g.moves2(s),
            };
            let mut d = vec![Rational::zero(); moves.len()];
            for (name, p) in entry {
                let pos = moves
                    .iter()
                    .position(|&a| g.action_name(a) == name)
                    .ok_or_else(|| {
                        ChainError::StrategyMismatch(format!("action {name:?} not available at state {}", s + 1))
                    })?;
                d[pos] = ratio::parse_rational(p).map_err(|e| ChainError::StrategyMismatch(e.to_string()))?;
            }
            dists.push(d);
        }
        Self::new(g, role, dists)
    }

    pub fn to_json(&self, g: &StochasticGame, role: Role) -> String {
        let file: StrategyFile = self
            .dists
            .iter()
            .enumerate()
            .map(|(s, d)| {
                let moves = match role {
                    Role::Max => g.moves1(s),
                    Role::Min => g.moves2(s),
                };
                moves
                    .iter()
                    .zip(d)
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(&a, p)| (g.action_name(a).to_string(), ratio::format_rational(p)))
                    .collect()
            })
            .collect();
        serde_json::to_string(&file).expect("serializable")
    }
}

type StrategyFile = Vec<BTreeMap<String, String>>;
