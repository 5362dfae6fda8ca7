//! Limit-average payoff of a fixed pair of stationary strategies.
//!
//! Fixing both strategies turns the game into a finite Markov chain with a
//! per-state expected reward. Its Cesàro averages converge almost surely, so
//! the liminf and limsup payoffs coincide and are computed exactly here.

use std::io::{self, Write};

use num_traits::{One, Signed, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::ChainError;
use crate::game::StochasticGame;
use crate::linalg;
use crate::ratio::{self, Rational};
use crate::strategy::StationaryStrategy;

/// A row-stochastic transition matrix with expected one-step rewards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardChain {
    transition: Vec<Vec<Rational>>,
    reward: Vec<Rational>,
}

impl RewardChain {
    pub fn new(transition: Vec<Vec<Rational>>, reward: Vec<Rational>) -> Result<Self, ChainError> {
        let n = reward.len();
        if transition.len() != n || transition.iter().any(|row| row.len() != n) {
            return Err(ChainError::StrategyMismatch("transition matrix is not n×n".into()));
        }
        for (s, row) in transition.iter().enumerate() {
            if row.iter().any(|p| p.is_negative()) || !row.iter().sum::<Rational>().is_one() {
                return Err(ChainError::StrategyMismatch(format!("row {} is not a distribution", s + 1)));
            }
        }
        Ok(RewardChain { transition, reward })
    }

    pub fn len(&self) -> usize {
        self.reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reward.is_empty()
    }

    pub fn transition(&self) -> &[Vec<Rational>] {
        &self.transition
    }

    pub fn reward(&self) -> &[Rational] {
        &self.reward
    }

    /// The same chain with every reward shifted by `c`.
    pub fn shift_rewards(&self, c: &Rational) -> RewardChain {
        RewardChain {
            transition: self.transition.clone(),
            reward: self.reward.iter().map(|r| r + c).collect(),
        }
    }

    /// Relabels states: old state `s` becomes `perm[s]`.
    pub fn permute(&self, perm: &[usize]) -> RewardChain {
        let n = self.len();
        let mut transition = vec![vec![Rational::zero(); n]; n];
        let mut reward = vec![Rational::zero(); n];
        for s in 0..n {
            reward[perm[s]] = self.reward[s].clone();
            for t in 0..n {
                transition[perm[s]][perm[t]] = self.transition[s][t].clone();
            }
        }
        RewardChain { transition, reward }
    }

    /// Closed strongly connected components of the support graph, each
    /// sorted; these are the recurrent classes.
    pub fn recurrent_classes(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut graph = DiGraph::<(), ()>::with_capacity(n, n * n);
        let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for s in 0..n {
            for t in 0..n {
                if !self.transition[s][t].is_zero() {
                    graph.add_edge(nodes[s], nodes[t], ());
                }
            }
        }
        let mut classes: Vec<Vec<usize>> = tarjan_scc(&graph)
            .into_iter()
            .map(|comp| {
                let mut c: Vec<usize> = comp.into_iter().map(|ix| ix.index()).collect();
                c.sort_unstable();
                c
            })
            .filter(|c| {
                c.iter().all(|&s| {
                    (0..n).all(|t| self.transition[s][t].is_zero() || c.binary_search(&t).is_ok())
                })
            })
            .collect();
        classes.sort();
        classes
    }

    /// Stationary distribution of a closed class, in the class's order.
    pub fn stationary_distribution(&self, class: &[usize]) -> Vec<Rational> {
        let m = class.len();
        // Rows j < m−1: Σ_i μ_i (P[i][j] − [i=j]) = 0; last row: Σ μ = 1.
        let mut a = vec![vec![Rational::zero(); m]; m];
        let mut b = vec![Rational::zero(); m];
        for j in 0..m - 1 {
            for i in 0..m {
                let mut coeff = self.transition[class[i]][class[j]].clone();
                if i == j {
                    coeff -= Rational::one();
                }
                a[j][i] = coeff;
            }
        }
        for i in 0..m {
            a[m - 1][i] = Rational::one();
        }
        b[m - 1] = Rational::one();
        linalg::solve(a, b).expect("irreducible class has a unique stationary distribution")
    }

    /// Expected β-discounted payoff from every state: the solution of
    /// `(I − (1−β)P) w = β·ρ`.
    pub fn discounted_payoff(&self, beta: &Rational) -> Vec<Rational> {
        let n = self.len();
        let stay = Rational::one() - beta;
        let a = (0..n)
            .map(|s| {
                (0..n)
                    .map(|t| {
                        let id = if s == t { Rational::one() } else { Rational::zero() };
                        id - &stay * &self.transition[s][t]
                    })
                    .collect()
            })
            .collect();
        let b = self.reward.iter().map(|r| beta * r).collect();
        linalg::solve(a, b).expect("I − (1−β)P is invertible for β > 0")
    }
}

/// `P(s,t) = Σ x_s(a)·y_s(b)·δ(s,a,b)(t)` and `ρ(s) = Σ x_s(a)·y_s(b)·r(s,a,b)`.
pub fn induced_chain(
    g: &StochasticGame,
    x: &StationaryStrategy,
    y: &StationaryStrategy,
) -> Result<RewardChain, ChainError> {
    let n = g.num_states();
    if x.dists().len() != n || y.dists().len() != n {
        return Err(ChainError::StrategyMismatch("strategy length differs from state count".into()));
    }
    let mut transition = vec![vec![Rational::zero(); n]; n];
    let mut reward = vec![Rational::zero(); n];
    for s in 0..n {
        if x.at(s).len() != g.moves1(s).len() || y.at(s).len() != g.moves2(s).len() {
            return Err(ChainError::StrategyMismatch(format!("move counts differ at state {}", s + 1)));
        }
        for (i, px) in x.at(s).iter().enumerate().filter(|(_, p)| !p.is_zero()) {
            for (j, py) in y.at(s).iter().enumerate().filter(|(_, p)| !p.is_zero()) {
                let w = px * py;
                reward[s] += &w * g.reward(s, i, j);
                for (t, p) in g.transition(s, i, j).iter().enumerate() {
                    if !p.is_zero() {
                        transition[s][t] += &w * p;
                    }
                }
            }
        }
    }
    Ok(RewardChain { transition, reward })
}

/// Exact limit-average payoff from every start state.
pub fn long_run_averages(chain: &RewardChain) -> Vec<Rational> {
    let n = chain.len();
    let mut value: Vec<Option<Rational>> = vec![None; n];
    for class in chain.recurrent_classes() {
        let mu = chain.stationary_distribution(&class);
        let gain: Rational = class.iter().zip(&mu).map(|(&s, m)| m * &chain.reward[s]).sum();
        for &s in &class {
            value[s] = Some(gain.clone());
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&s| value[s].is_none()).collect();
    if !transient.is_empty() {
        // (I − P_TT) h = P_TR · gain
        let pos = |s: usize| transient.binary_search(&s).ok();
        let m = transient.len();
        let mut a = vec![vec![Rational::zero(); m]; m];
        let mut b = vec![Rational::zero(); m];
        for (row, &s) in transient.iter().enumerate() {
            a[row][row] = Rational::one();
            for t in 0..n {
                let p = &chain.transition[s][t];
                if p.is_zero() {
                    continue;
                }
                match pos(t) {
                    Some(col) => a[row][col] -= p,
                    None => b[row] += p * value[t].as_ref().unwrap(),
                }
            }
        }
        let h = linalg::solve(a, b).expect("transient states reach a recurrent class");
        for (&s, v) in transient.iter().zip(h) {
            value[s] = Some(v);
        }
    }
    value.into_iter().map(Option::unwrap).collect()
}

pub fn long_run_average(chain: &RewardChain, s: usize) -> Result<Rational, ChainError> {
    if s >= chain.len() {
        return Err(ChainError::InvalidState(s));
    }
    Ok(long_run_averages(chain).swap_remove(s))
}

/// One round of a simulated play.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// 1-based round number `N`.
    pub step: usize,
    pub state: usize,
    /// Alphabet indices of the chosen actions.
    pub action1: usize,
    pub action2: usize,
    pub reward: Rational,
    /// `(1/N)·Σ_{i≤N} reward_i`.
    pub running_average: Rational,
}

fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn sample(rng: &mut ChaCha8Rng, cum: &[f64], probs: &[Rational]) -> usize {
    let u: f64 = rng.random::<f64>() * cum.last().copied().unwrap_or(1.0);
    cum.iter()
        .position(|&c| u < c)
        .unwrap_or_else(|| probs.iter().rposition(|p| !p.is_zero()).unwrap())
}

/// Simulates `horizon` rounds from `start` with a ChaCha8 generator seeded by
/// `seed`. Probabilities are converted to `f64` once for sampling.
pub fn simulate_play(
    g: &StochasticGame,
    x: &StationaryStrategy,
    y: &StationaryStrategy,
    start: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<TraceStep>, ChainError> {
    if start >= g.num_states() {
        return Err(ChainError::InvalidState(start));
    }
    if horizon == 0 {
        return Err(ChainError::InvalidHorizon);
    }
    // Validates dimensions.
    induced_chain(g, x, y)?;
    let n = g.num_states();
    let to_f = |v: &[Rational]| cumulative(v.iter().map(ratio::to_f64));
    let cum_x: Vec<Vec<f64>> = (0..n).map(|s| to_f(x.at(s))).collect();
    let cum_y: Vec<Vec<f64>> = (0..n).map(|s| to_f(y.at(s))).collect();
    let cum_t: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
        .map(|s| g.state_matrix(s, |i, j| to_f(g.transition(s, i, j))))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Vec::with_capacity(horizon);
    let mut total = Rational::zero();
    let mut s = start;
    for step in 1..=horizon {
        let i = sample(&mut rng, &cum_x[s], x.at(s));
        let j = sample(&mut rng, &cum_y[s], y.at(s));
        let reward = g.reward(s, i, j).clone();
        total += &reward;
        trace.push(TraceStep {
            step,
            state: s,
            action1: g.moves1(s)[i],
            action2: g.moves2(s)[j],
            running_average: &total / ratio::int(step as i64),
            reward,
        });
        s = sample(&mut rng, &cum_t[s][i][j], g.transition(s, i, j));
    }
    Ok(trace)
}

/// Batch-means estimate of the standard error of the final running average.
pub fn batch_means_standard_error(trace: &[TraceStep], batches: usize) -> f64 {
    let size = trace.len() / batches;
    if size == 0 || batches < 2 {
        return f64::INFINITY;
    }
    let means: Vec<f64> = trace
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().map(|t| ratio::to_f64(&t.reward)).sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Writes `step,state,action1,action2,reward,running_average` rows with
/// 1-based states, action names and exact rationals.
pub fn write_trace_csv<W: Write>(g: &StochasticGame, trace: &[TraceStep], mut out: W) -> io::Result<()> {
    writeln!(out, "step,state,action1,action2,reward,running_average")?;
    for t in trace {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t.step,
            t.state + 1,
            g.action_name(t.action1),
            g.action_name(t.action2),
            ratio::format_rational(&t.reward),
            ratio::format_rational(&t.running_average)
        )?;
    }
    Ok(())
}
