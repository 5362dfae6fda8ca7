//! The stochastic game model: ingestion, validation, size metrics, reward
//! normalization and the perturbation bound between two games on the same
//! arena.
//!
//! States and move-set positions are 0-based throughout the library. The
//! JSON description numbers states from 1, and generated variable names
//! follow that convention too.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::GameError;
use crate::ratio::{self, rational_bits, Rational};

/// A finite two-player zero-sum stochastic game with rational data.
///
/// Transition and reward tables are indexed by `(state, row, col)` where `row`
/// is a position in `moves1(state)` and `col` a position in `moves2(state)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StochasticGame {
    actions: Vec<String>,
    moves1: Vec<Vec<usize>>,
    moves2: Vec<Vec<usize>>,
    transition: Vec<Vec<Vec<Vec<Rational>>>>,
    reward: Vec<Vec<Vec<Rational>>>,
}

impl StochasticGame {
    /// Validates a parsed description and converts it into a game.
    pub fn from_description(desc: &GameDescription) -> Result<Self, GameError> {
        let report = validate_game(desc);
        if !report.is_valid() {
            return Err(GameError::Invalid(report));
        }
        let index: BTreeMap<&str, usize> = desc
            .actions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.as_str(), i))
            .collect();
        let to_ids = |sets: &[Vec<String>]| -> Vec<Vec<usize>> {
            sets.iter()
                .map(|set| set.iter().map(|a| index[a.as_str()]).collect())
                .collect()
        };
        let moves1 = to_ids(&desc.moves1);
        let moves2 = to_ids(&desc.moves2);
        let n = desc.states;
        let position = |set: &[String], a: &str| set.iter().position(|x| x == a).unwrap();

        let mut transition: Vec<Vec<Vec<Vec<Rational>>>> = (0..n)
            .map(|s| vec![vec![vec![Rational::zero(); n]; moves2[s].len()]; moves1[s].len()])
            .collect();
        let mut reward: Vec<Vec<Vec<Rational>>> = (0..n)
            .map(|s| vec![vec![Rational::zero(); moves2[s].len()]; moves1[s].len()])
            .collect();
        for rec in &desc.transitions {
            let s = rec.s - 1;
            let i = position(&desc.moves1[s], &rec.a);
            let j = position(&desc.moves2[s], &rec.b);
            for e in &rec.dist {
                transition[s][i][j][e.t - 1] = e.p.clone();
            }
        }
        for rec in &desc.rewards {
            let s = rec.s - 1;
            let i = position(&desc.moves1[s], &rec.a);
            let j = position(&desc.moves2[s], &rec.b);
            reward[s][i][j] = rec.r.clone();
        }
        Ok(StochasticGame {
            actions: desc.actions.clone(),
            moves1,
            moves2,
            transition,
            reward,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, GameError> {
        let desc: GameDescription = serde_json::from_str(text)?;
        Self::from_description(&desc)
    }

    /// The description this game was (or could have been) parsed from.
    /// Zero-probability successors are omitted.
    pub fn to_description(&self) -> GameDescription {
        let names = |set: &[usize]| -> Vec<String> {
            set.iter().map(|&a| self.actions[a].clone()).collect()
        };
        let mut transitions = Vec::new();
        let mut rewards = Vec::new();
        for s in 0..self.num_states() {
            for (i, &a) in self.moves1[s].iter().enumerate() {
                for (j, &b) in self.moves2[s].iter().enumerate() {
                    let dist = self.transition[s][i][j]
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| !p.is_zero())
                        .map(|(t, p)| DistEntry { t: t + 1, p: p.clone() })
                        .collect();
                    transitions.push(TransitionRecord {
                        s: s + 1,
                        a: self.actions[a].clone(),
                        b: self.actions[b].clone(),
                        dist,
                    });
                    rewards.push(RewardRecord {
                        s: s + 1,
                        a: self.actions[a].clone(),
                        b: self.actions[b].clone(),
                        r: self.reward[s][i][j].clone(),
                    });
                }
            }
        }
        GameDescription {
            states: self.num_states(),
            actions: self.actions.clone(),
            moves1: self.moves1.iter().map(|m| names(m)).collect(),
            moves2: self.moves2.iter().map(|m| names(m)).collect(),
            transitions,
            rewards,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_description()).expect("serializable")
    }

    pub fn num_states(&self) -> usize {
        self.moves1.len()
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, action: usize) -> &str {
        &self.actions[action]
    }

    /// Γ₁(s) as indices into [`actions`](Self::actions).
    pub fn moves1(&self, s: usize) -> &[usize] {
        &self.moves1[s]
    }

    /// Γ₂(s) as indices into [`actions`](Self::actions).
    pub fn moves2(&self, s: usize) -> &[usize] {
        &self.moves2[s]
    }

    /// Successor distribution over all states for the `(row, col)` entry.
    pub fn transition(&self, s: usize, row: usize, col: usize) -> &[Rational] {
        &self.transition[s][row][col]
    }

    pub fn reward(&self, s: usize, row: usize, col: usize) -> &Rational {
        &self.reward[s][row][col]
    }

    /// All `(s, row, col)` triples on which δ and r are defined.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.num_states()).flat_map(move |s| {
            let cols = self.moves2[s].len();
            (0..self.moves1[s].len()).flat_map(move |i| (0..cols).map(move |j| (s, i, j)))
        })
    }

    pub fn rewards(&self) -> impl Iterator<Item = &Rational> + '_ {
        self.reward.iter().flatten().flatten()
    }

    /// ‖r‖, the largest absolute reward.
    pub fn reward_norm(&self) -> Rational {
        ratio::abs_max(self.rewards())
    }

    /// Applies `f` to every reward, keeping the arena unchanged.
    pub fn map_rewards(&self, mut f: impl FnMut(&Rational) -> Rational) -> StochasticGame {
        let mut out = self.clone();
        for r in out.reward.iter_mut().flatten().flatten() {
            *r = f(r);
        }
        out
    }

    /// True when every reward lies in `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.rewards()
            .all(|r| !r.is_negative() && *r <= Rational::one())
    }

    pub fn size_metrics(&self) -> SizeMetrics {
        size_metrics(self)
    }

    /// The matrix whose `(row, col)` entry is `f(row, col)` at state `s`.
    pub(crate) fn state_matrix<T>(
        &self,
        s: usize,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Vec<Vec<T>> {
        (0..self.moves1[s].len())
            .map(|i| (0..self.moves2[s].len()).map(|j| f(i, j)).collect())
            .collect()
    }

    fn same_arena(&self, other: &StochasticGame) -> Result<(), GameError> {
        let mismatch = |what: &str| Err(GameError::StructureMismatch(what.to_string()));
        if self.num_states() != other.num_states() {
            return mismatch("state counts differ");
        }
        if self.actions != other.actions {
            return mismatch("action alphabets differ");
        }
        if self.moves1 != other.moves1 || self.moves2 != other.moves2 {
            return mismatch("move assignments differ");
        }
        Ok(())
    }
}

/// Incremental construction of a game from code. States are 0-based; actions
/// are registered in the alphabet on first use.
#[derive(Debug, Clone, Default)]
pub struct GameBuilder {
    desc: GameDescription,
}

impl GameBuilder {
    pub fn new(states: usize) -> Self {
        GameBuilder {
            desc: GameDescription {
                states,
                moves1: vec![Vec::new(); states],
                moves2: vec![Vec::new(); states],
                ..Default::default()
            },
        }
    }

    fn register(&mut self, action: &str) {
        if !self.desc.actions.iter().any(|a| a == action) {
            self.desc.actions.push(action.to_string());
        }
    }

    pub fn moves(mut self, s: usize, moves1: &[&str], moves2: &[&str]) -> Self {
        for a in moves1.iter().chain(moves2) {
            self.register(a);
        }
        self.desc.moves1[s] = moves1.iter().map(|a| a.to_string()).collect();
        self.desc.moves2[s] = moves2.iter().map(|a| a.to_string()).collect();
        self
    }

    /// Defines `r(s, a, b)` and `δ(s, a, b)` from `(successor, probability)`
    /// pairs.
    pub fn entry(mut self, s: usize, a: &str, b: &str, reward: Rational, dist: &[(usize, Rational)]) -> Self {
        self.desc.transitions.push(TransitionRecord {
            s: s + 1,
            a: a.to_string(),
            b: b.to_string(),
            dist: dist
                .iter()
                .map(|(t, p)| DistEntry { t: t + 1, p: p.clone() })
                .collect(),
        });
        self.desc.rewards.push(RewardRecord {
            s: s + 1,
            a: a.to_string(),
            b: b.to_string(),
            r: reward,
        });
        self
    }

    pub fn description(&self) -> &GameDescription {
        &self.desc
    }

    pub fn build(self) -> Result<StochasticGame, GameError> {
        StochasticGame::from_description(&self.desc)
    }
}

/// The JSON game file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDescription {
    pub states: usize,
    pub actions: Vec<String>,
    pub moves1: Vec<Vec<String>>,
    pub moves2: Vec<Vec<String>>,
    pub transitions: Vec<TransitionRecord>,
    pub rewards: Vec<RewardRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRecord {
    pub s: usize,
    pub a: String,
    pub b: String,
    pub dist: Vec<DistEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistEntry {
    pub t: usize,
    #[serde(with = "ratio::serde_str")]
    pub p: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardRecord {
    pub s: usize,
    pub a: String,
    pub b: String,
    #[serde(with = "ratio::serde_str")]
    pub r: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Player {
    One,
    Two,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::One => write!(f, "player 1"),
            Player::Two => write!(f, "player 2"),
        }
    }
}

/// One broken invariant of a game description. States are reported 1-based,
/// as in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoStates,
    MoveTableLength { player: Player, len: usize },
    EmptyMoveSet { state: usize, player: Player },
    UnknownAction { state: usize, action: String },
    DuplicateAction { action: String },
    DuplicateMove { state: usize, player: Player, action: String },
    StateOutOfRange { state: usize },
    OutsideMoves { state: usize, a: String, b: String },
    MissingTransition { state: usize, a: String, b: String },
    DuplicateTransition { state: usize, a: String, b: String },
    DuplicateSuccessor { state: usize, a: String, b: String, t: usize },
    NegativeProbability { state: usize, a: String, b: String, t: usize },
    DistributionSum { state: usize, a: String, b: String, sum: Rational },
    MissingReward { state: usize, a: String, b: String },
    DuplicateReward { state: usize, a: String, b: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoStates => write!(f, "game has no states"),
            MoveTableLength { player, len } => {
                write!(f, "move table of {player} has {len} entries, expected one per state")
            }
            EmptyMoveSet { state, player } => write!(f, "empty move set for {player} at state {state}"),
            UnknownAction { state, action } => {
                write!(f, "unknown action {action:?} referenced at state {state}")
            }
            DuplicateAction { action } => write!(f, "action {action:?} listed twice"),
            DuplicateMove { state, player, action } => {
                write!(f, "action {action:?} listed twice for {player} at state {state}")
            }
            StateOutOfRange { state } => write!(f, "state {state} out of range"),
            OutsideMoves { state, a, b } => {
                write!(f, "entry ({state},{a},{b}) is outside the move sets")
            }
            MissingTransition { state, a, b } => {
                write!(f, "missing transition at ({state},{a},{b})")
            }
            DuplicateTransition { state, a, b } => {
                write!(f, "transition at ({state},{a},{b}) defined twice")
            }
            DuplicateSuccessor { state, a, b, t } => {
                write!(f, "successor {t} listed twice at ({state},{a},{b})")
            }
            NegativeProbability { state, a, b, t } => {
                write!(f, "negative probability for successor {t} at ({state},{a},{b})")
            }
            DistributionSum { state, a, b, sum } => write!(
                f,
                "distribution sum ≠ 1 at ({state},{a},{b}): sums to {}",
                ratio::format_rational(sum)
            ),
            MissingReward { state, a, b } => write!(f, "missing reward at ({state},{a},{b})"),
            DuplicateReward { state, a, b } => write!(f, "reward at ({state},{a},{b}) defined twice"),
        }
    }
}

/// Every invariant violation found in a description; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

pub fn validate_game(desc: &GameDescription) -> ValidationReport {
    let mut out = Vec::new();
    let n = desc.states;
    if n == 0 {
        out.push(Violation::NoStates);
    }
    let mut alphabet = BTreeSet::new();
    for a in &desc.actions {
        if !alphabet.insert(a.as_str()) {
            out.push(Violation::DuplicateAction { action: a.clone() });
        }
    }
    for (player, table) in [(Player::One, &desc.moves1), (Player::Two, &desc.moves2)] {
        if table.len() != n {
            out.push(Violation::MoveTableLength { player: player.clone(), len: table.len() });
        }
        for (s, set) in table.iter().enumerate() {
            if set.is_empty() {
                out.push(Violation::EmptyMoveSet { state: s + 1, player: player.clone() });
            }
            let mut seen = BTreeSet::new();
            for a in set {
                if !alphabet.contains(a.as_str()) {
                    out.push(Violation::UnknownAction { state: s + 1, action: a.clone() });
                }
                if !seen.insert(a.as_str()) {
                    out.push(Violation::DuplicateMove {
                        state: s + 1,
                        player: player.clone(),
                        action: a.clone(),
                    });
                }
            }
        }
    }

    let in_moves = |s: usize, a: &str, b: &str| -> bool {
        (1..=n).contains(&s)
            && desc.moves1.get(s - 1).is_some_and(|m| m.iter().any(|x| x == a))
            && desc.moves2.get(s - 1).is_some_and(|m| m.iter().any(|x| x == b))
    };

    let mut transitions: BTreeMap<(usize, &str, &str), usize> = BTreeMap::new();
    for rec in &desc.transitions {
        let (s, a, b) = (rec.s, rec.a.clone(), rec.b.clone());
        if !(1..=n).contains(&s) {
            out.push(Violation::StateOutOfRange { state: s });
            continue;
        }
        if !in_moves(s, &a, &b) {
            out.push(Violation::OutsideMoves { state: s, a, b });
            continue;
        }
        let count = transitions.entry((s, rec.a.as_str(), rec.b.as_str())).or_default();
        *count += 1;
        if *count == 2 {
            out.push(Violation::DuplicateTransition { state: s, a: a.clone(), b: b.clone() });
        }
        let mut sum = Rational::zero();
        let mut successors = BTreeSet::new();
        for e in &rec.dist {
            if !(1..=n).contains(&e.t) {
                out.push(Violation::StateOutOfRange { state: e.t });
                continue;
            }
            if !successors.insert(e.t) {
                out.push(Violation::DuplicateSuccessor { state: s, a: a.clone(), b: b.clone(), t: e.t });
            }
            if e.p.is_negative() {
                out.push(Violation::NegativeProbability { state: s, a: a.clone(), b: b.clone(), t: e.t });
            }
            sum += &e.p;
        }
        if !sum.is_one() {
            out.push(Violation::DistributionSum { state: s, a, b, sum });
        }
    }

    let mut rewards: BTreeMap<(usize, &str, &str), usize> = BTreeMap::new();
    for rec in &desc.rewards {
        if !(1..=n).contains(&rec.s) {
            out.push(Violation::StateOutOfRange { state: rec.s });
            continue;
        }
        if !in_moves(rec.s, &rec.a, &rec.b) {
            out.push(Violation::OutsideMoves { state: rec.s, a: rec.a.clone(), b: rec.b.clone() });
            continue;
        }
        let count = rewards.entry((rec.s, rec.a.as_str(), rec.b.as_str())).or_default();
        *count += 1;
        if *count == 2 {
            out.push(Violation::DuplicateReward { state: rec.s, a: rec.a.clone(), b: rec.b.clone() });
        }
    }

    if desc.moves1.len() == n && desc.moves2.len() == n {
        for s in 1..=n {
            for a in &desc.moves1[s - 1] {
                for b in &desc.moves2[s - 1] {
                    let key = (s, a.as_str(), b.as_str());
                    if !transitions.contains_key(&key) {
                        out.push(Violation::MissingTransition { state: s, a: a.clone(), b: b.clone() });
                    }
                    if !rewards.contains_key(&key) {
                        out.push(Violation::MissingReward { state: s, a: a.clone(), b: b.clone() });
                    }
                }
            }
        }
    }
    ValidationReport { violations: out }
}

/// Counts and bit sizes of a game's description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SizeMetrics {
    pub n: usize,
    /// |δ| = Σ_s |Γ₁(s)|·|Γ₂(s)|.
    pub delta_entries: usize,
    pub size_delta: u64,
    pub size_r: u64,
    pub size_g: u64,
}

/// Bit sizes count, for every rational, a sign bit plus the binary digits of
/// numerator and denominator. `size_delta` covers every successor entry,
/// zeros included.
pub fn size_metrics(g: &StochasticGame) -> SizeMetrics {
    let mut delta_entries = 0;
    let mut size_delta = 0;
    let mut size_r = 0;
    for (s, i, j) in g.entries() {
        delta_entries += 1;
        size_delta += g.transition(s, i, j).iter().map(rational_bits).sum::<u64>();
        size_r += rational_bits(g.reward(s, i, j));
    }
    SizeMetrics {
        n: g.num_states(),
        delta_entries,
        size_delta,
        size_r,
        size_g: size_delta + size_r,
    }
}

/// The scale `M = max |r|` used to map rewards into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationRecord {
    pub m_scale: Rational,
    /// Set when every reward is 0; the value is then 0 everywhere.
    pub degenerate: bool,
}

impl NormalizationRecord {
    /// Maps a value of the original game to the normalized game: `(x+M)/(2M)`.
    pub fn normalize_value(&self, x: &Rational) -> Result<Rational, GameError> {
        if self.degenerate {
            return Err(GameError::DegenerateNormalization);
        }
        Ok((x + &self.m_scale) / (&self.m_scale * ratio::int(2)))
    }

    pub fn denormalize_value(&self, x: &Rational) -> Result<Rational, GameError> {
        if self.degenerate {
            return Err(GameError::DegenerateNormalization);
        }
        Ok(&self.m_scale * (x * ratio::int(2) - Rational::one()))
    }

    pub fn denormalize_interval(&self, l: &Rational, u: &Rational) -> Result<(Rational, Rational), GameError> {
        denormalize_interval(self, l, u)
    }
}

/// Rescales rewards by `r ↦ (r + M) / (2M)`. An all-zero game comes back
/// unchanged with the degenerate flag set.
pub fn normalize(g: &StochasticGame) -> (StochasticGame, NormalizationRecord) {
    let m = g.reward_norm();
    if m.is_zero() {
        return (
            g.clone(),
            NormalizationRecord { m_scale: m, degenerate: true },
        );
    }
    let two_m = &m * ratio::int(2);
    let normalized = g.map_rewards(|r| (r + &m) / &two_m);
    (normalized, NormalizationRecord { m_scale: m, degenerate: false })
}

/// Maps an interval of normalized values back: `[M(2l−1), M(2u−1)]`.
pub fn denormalize_interval(
    rec: &NormalizationRecord,
    l: &Rational,
    u: &Rational,
) -> Result<(Rational, Rational), GameError> {
    if rec.degenerate {
        return Err(GameError::DegenerateNormalization);
    }
    if l > u {
        return Err(GameError::InvertedInterval(
            ratio::format_rational(l),
            ratio::format_rational(u),
        ));
    }
    Ok((rec.denormalize_value(l)?, rec.denormalize_value(u)?))
}

/// Distortion bounds between a game and an approximate description of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationBound {
    /// Least multiplicative transition distortion η; `None` when some entry
    /// is zero in one game only, so no finite η exists.
    pub eta: Option<Rational>,
    /// Largest absolute reward difference γ.
    pub gamma: Rational,
    /// ρ, or `None` ("unbounded") unless `η < 1/(2|S|)`.
    pub rho: Option<Rational>,
}

/// Least `η ≥ 0` with `p ≤ (1+η)·q` and `q ≤ (1+η)·p`. Zero against zero
/// imposes nothing; zero against a positive entry admits no finite `η`.
pub fn transition_distortion(p: &Rational, q: &Rational) -> Option<Rational> {
    match (p.is_zero(), q.is_zero()) {
        (true, true) => Some(Rational::zero()),
        (true, false) | (false, true) => None,
        (false, false) => {
            let ratio = if p > q { p / q } else { q / p };
            Some(ratio - Rational::one())
        }
    }
}

/// `ρ = 2η|S| / (1 − 2η|S|) · ‖r‖ + γ`, finite only for `η < 1/(2|S|)`.
pub fn rho_bound(eta: &Rational, gamma: &Rational, states: usize, reward_norm: &Rational) -> Option<Rational> {
    let scaled = eta * ratio::int(2 * states as i64);
    if scaled >= Rational::one() {
        return None;
    }
    Some(&scaled / (Rational::one() - &scaled) * reward_norm + gamma)
}

/// ρ(G, G′) for two games on the same arena. The distortion inequalities are
/// closed at the least feasible η; `‖r‖` is taken from `g`.
pub fn perturbation_bound(g: &StochasticGame, g2: &StochasticGame) -> Result<PerturbationBound, GameError> {
    g.same_arena(g2)?;
    let mut eta = Some(Rational::zero());
    let mut gamma = Rational::zero();
    for (s, i, j) in g.entries() {
        for (p, q) in g.transition(s, i, j).iter().zip(g2.transition(s, i, j)) {
            eta = match (eta, transition_distortion(p, q)) {
                (Some(cur), Some(d)) => Some(if d > cur { d } else { cur }),
                _ => None,
            };
        }
        let diff = (g.reward(s, i, j) - g2.reward(s, i, j)).abs();
        if diff > gamma {
            gamma = diff;
        }
    }
    let rho = eta
        .as_ref()
        .and_then(|e| rho_bound(e, &gamma, g.num_states(), &g.reward_norm()));
    Ok(PerturbationBound { eta, gamma, rho })
}
