//! β-discounted values as the fixed point of the Shapley operator
//! `T_β v (s) = val[ β·r(s,a,b) + (1−β)·Σ_t δ(s,a,b)(t)·v(t) ]`,
//! a (1−β)-contraction in the sup norm.
//!
//! Value iteration starts from the zero valuation and stops on the
//! a-posteriori residual: if `‖T v − v‖ ≤ tol·β/(1−β)` then
//! `‖T v − v_β‖ ≤ tol`.

use std::ops::Index;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::chain;
use crate::error::SolverError;
use crate::game::StochasticGame;
use crate::matrix_game::{self, MatrixGame};
use crate::ratio::{self, Rational};
use crate::strategy::StationaryStrategy;

/// Per-state values, indexed by 0-based state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Valuation(pub Vec<Rational>);

impl Valuation {
    pub fn zeros(n: usize) -> Self {
        Valuation(vec![Rational::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    /// `‖self − other‖∞`.
    pub fn sup_distance(&self, other: &Valuation) -> Rational {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(Rational::zero(), |m, d| if d > m { d } else { m })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(ratio::to_f64).collect()
    }
}

impl Index<usize> for Valuation {
    type Output = Rational;

    fn index(&self, s: usize) -> &Rational {
        &self.0[s]
    }
}

/// How the outer value iteration represents its iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IterationMode {
    /// Exact rationals throughout; iterates grow in size.
    Exact,
    /// `f64` iterates, followed by one exact Shapley step that certifies the
    /// returned valuation and strategies.
    Numeric,
    /// Exact for small games needing few iterations, numeric otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub mode: IterationMode,
    /// `Auto` runs exactly when `n·|δ|` is at most this.
    pub exact_size_limit: usize,
    /// `Auto` runs exactly when the a-priori iteration bound is at most this.
    pub exact_iteration_limit: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mode: IterationMode::Auto,
            exact_size_limit: 64,
            exact_iteration_limit: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscountedSolution {
    pub beta: Rational,
    pub valuation: Valuation,
    pub strategy1: StationaryStrategy,
    pub strategy2: StationaryStrategy,
    /// `‖valuation − previous iterate‖∞`, computed exactly.
    pub residual: Rational,
    /// `residual·(1−β)/β`, a bound on `‖valuation − v_β‖∞`.
    pub error_bound: Rational,
    pub iterations: u64,
    pub mode: IterationMode,
}

fn check_beta(beta: &Rational) -> Result<(), SolverError> {
    if !beta.is_positive() || *beta >= Rational::one() {
        return Err(SolverError::InvalidBeta(ratio::format_rational(beta)));
    }
    Ok(())
}

fn check_tol(tol: &Rational) -> Result<(), SolverError> {
    if !tol.is_positive() {
        return Err(SolverError::InvalidTolerance(ratio::format_rational(tol)));
    }
    Ok(())
}

/// The one-shot game played at `s` under continuation values `v`.
pub fn stage_game(g: &StochasticGame, beta: &Rational, v: &Valuation, s: usize) -> MatrixGame {
    let stay = Rational::one() - beta;
    let payoff = g.state_matrix(s, |i, j| {
        let cont: Rational = g
            .transition(s, i, j)
            .iter()
            .zip(v.values())
            .filter(|(p, _)| !p.is_zero())
            .map(|(p, w)| p * w)
            .sum();
        beta * g.reward(s, i, j) + &stay * cont
    });
    MatrixGame::new(payoff).expect("move sets are non-empty")
}

/// One exact application of the Shapley operator, with the optimal
/// per-state strategies of each stage game.
pub fn shapley_operator(
    g: &StochasticGame,
    beta: &Rational,
    v: &Valuation,
) -> Result<(Valuation, StationaryStrategy, StationaryStrategy), SolverError> {
    check_beta(beta)?;
    if v.len() != g.num_states() {
        return Err(SolverError::ValuationLength { expected: g.num_states(), got: v.len() });
    }
    let mut values = Vec::with_capacity(v.len());
    let mut rows = Vec::with_capacity(v.len());
    let mut cols = Vec::with_capacity(v.len());
    for s in 0..g.num_states() {
        let sol = stage_game(g, beta, v, s).solve();
        values.push(sol.value);
        rows.push(sol.row_strategy);
        cols.push(sol.col_strategy);
    }
    Ok((
        Valuation(values),
        StationaryStrategy::from_parts(rows),
        StationaryStrategy::from_parts(cols),
    ))
}

/// Least `k` with `reward_span·(1−β)^k ≤ tol·β/(1−β)`.
pub fn iteration_bound(beta: &Rational, tol: &Rational, reward_span: &Rational) -> Result<u64, SolverError> {
    check_beta(beta)?;
    check_tol(tol)?;
    if reward_span.is_negative() {
        return Err(SolverError::InvalidSpan(ratio::format_rational(reward_span)));
    }
    if reward_span.is_zero() {
        return Ok(0);
    }
    let stay = Rational::one() - beta;
    let target = tol * beta / &stay / reward_span;
    if target >= Rational::one() {
        return Ok(0);
    }
    // Float estimate, then exact correction while the powers stay small.
    let ln_target = ln_rational(&target);
    let ln_stay = (-ratio::to_f64(beta)).ln_1p();
    let estimate = (ln_target / ln_stay).ceil().max(1.0) as u64;
    if estimate > 4096 {
        return Ok(estimate);
    }
    let holds = |k: u64| num_traits::pow(stay.clone(), k as usize) <= target;
    let mut k = estimate;
    while !holds(k) {
        k += 1;
    }
    while k > 0 && holds(k - 1) {
        k -= 1;
    }
    Ok(k)
}

fn ln_rational(q: &Rational) -> f64 {
    let ln_big = |n: &num_bigint::BigInt| -> f64 {
        let bits = n.bits();
        if bits < 1000 {
            n.to_f64().unwrap().ln()
        } else {
            let shift = bits - 60;
            (n >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
        }
    };
    ln_big(q.numer()) - ln_big(q.denom())
}

/// Approximates `v_β` to within `tol` in the sup norm.
pub fn discounted_value(g: &StochasticGame, beta: &Rational, tol: &Rational) -> Result<DiscountedSolution, SolverError> {
    discounted_value_with(g, beta, tol, &SolverConfig::default())
}

pub fn discounted_value_with(
    g: &StochasticGame,
    beta: &Rational,
    tol: &Rational,
    cfg: &SolverConfig,
) -> Result<DiscountedSolution, SolverError> {
    check_beta(beta)?;
    check_tol(tol)?;
    let bound = iteration_bound(beta, tol, &g.reward_norm())?;
    let mode = match cfg.mode {
        IterationMode::Auto => {
            let size = g.num_states() * g.size_metrics().delta_entries;
            if size <= cfg.exact_size_limit && bound <= cfg.exact_iteration_limit {
                IterationMode::Exact
            } else {
                IterationMode::Numeric
            }
        }
        m => m,
    };
    let stop = tol * beta / (Rational::one() - beta);
    let sol = match mode {
        IterationMode::Exact => iterate_exact(g, beta, &stop, Valuation::zeros(g.num_states()), 0)?,
        _ => iterate_numeric(g, beta, tol, &stop, bound)?,
    };
    polish(g, sol)
}

/// Evaluates the returned stationary pair exactly and keeps one Shapley step
/// from its payoff when that has a smaller residual. When the pair is
/// optimal the residual drops to zero and the valuation is exact.
fn polish(g: &StochasticGame, sol: DiscountedSolution) -> Result<DiscountedSolution, SolverError> {
    if sol.residual.is_zero() {
        return Ok(sol);
    }
    let Ok(chain) = chain::induced_chain(g, &sol.strategy1, &sol.strategy2) else {
        return Ok(sol);
    };
    let w = Valuation(chain.discounted_payoff(&sol.beta));
    let candidate = certify(g, &sol.beta, w, sol.iterations)?;
    Ok(if candidate.residual < sol.residual {
        DiscountedSolution { mode: sol.mode, ..candidate }
    } else {
        sol
    })
}

fn iterate_exact(
    g: &StochasticGame,
    beta: &Rational,
    stop: &Rational,
    start: Valuation,
    mut iterations: u64,
) -> Result<DiscountedSolution, SolverError> {
    // Iterates are rounded to a dyadic grid of mesh h ≤ stop·β/8 so their
    // size stays bounded. Rounding adds at most h per step, leaving the
    // iterates within h/β of the fixed point, and the residual then falls
    // below `stop`; the stopping rule is evaluated exactly on each iterate.
    let grid = Rational::from_integer(ratio::pow2(ratio::ceil_log2_recip(&(stop * beta / ratio::int(8)))));
    let mut v = start;
    loop {
        let (next, x, y) = shapley_operator(g, beta, &v)?;
        iterations += 1;
        let residual = next.sup_distance(&v);
        if residual <= *stop {
            let error_bound = &residual * (Rational::one() - beta) / beta;
            return Ok(DiscountedSolution {
                beta: beta.clone(),
                valuation: next,
                strategy1: x,
                strategy2: y,
                residual,
                error_bound,
                iterations,
                mode: IterationMode::Exact,
            });
        }
        v = Valuation(next.0.iter().map(|q| (q * &grid).round() / &grid).collect());
    }
}

/// Float stage tables: per state, per entry, `β·r` and the successors with
/// weights `(1−β)·δ`.
type Tables = Vec<Vec<Vec<(f64, Vec<(usize, f64)>)>>>;

/// Per state, the stage strategies of both players.
type StagePairs = Vec<(Vec<f64>, Vec<f64>)>;

/// One float Shapley step: new values, residual and stage strategies.
fn step_f64(tables: &Tables, v: &[f64]) -> (Vec<f64>, f64, StagePairs) {
    let mut next = Vec::with_capacity(v.len());
    let mut strategies = Vec::with_capacity(v.len());
    let mut residual = 0.0f64;
    for (s, table) in tables.iter().enumerate() {
        let payoff: Vec<Vec<f64>> = table
            .iter()
            .map(|row| {
                row.iter()
                    .map(|(r, succ)| r + succ.iter().map(|&(t, p)| p * v[t]).sum::<f64>())
                    .collect()
            })
            .collect();
        let (value, x, y) = if payoff.len() == 1 && payoff[0].len() == 1 {
            (payoff[0][0], vec![1.0], vec![1.0])
        } else {
            matrix_game::solve_f64(&payoff)
        };
        residual = residual.max((value - v[s]).abs());
        next.push(value);
        strategies.push((x, y));
    }
    (next, residual, strategies)
}

/// Discounted payoff of a fixed stationary pair: solves `(I − Q)·w = c`.
fn evaluate_pair_f64(tables: &Tables, strategies: &[(Vec<f64>, Vec<f64>)]) -> Option<Vec<f64>> {
    let n = tables.len();
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for (s, table) in tables.iter().enumerate() {
        a[s][s] += 1.0;
        let (x, y) = &strategies[s];
        for (i, row) in table.iter().enumerate() {
            for (j, (r, succ)) in row.iter().enumerate() {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                a[s][n] += w * r;
                for &(t, p) in succ {
                    a[s][t] -= w * p;
                }
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let w: Vec<f64> = (0..n).map(|s| a[s][n] / a[s][s]).collect();
    w.iter().all(|x| x.is_finite()).then_some(w)
}

fn iterate_numeric(
    g: &StochasticGame,
    beta: &Rational,
    tol: &Rational,
    stop: &Rational,
    bound: u64,
) -> Result<DiscountedSolution, SolverError> {
    let n = g.num_states();
    let b = ratio::to_f64(beta);
    let tables: Tables = (0..n)
        .map(|s| {
            g.state_matrix(s, |i, j| {
                let r = b * ratio::to_f64(g.reward(s, i, j));
                let succ = g
                    .transition(s, i, j)
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(t, p)| (t, (1.0 - b) * ratio::to_f64(p)))
                    .collect();
                (r, succ)
            })
        })
        .collect();
    // Leave headroom below the exact threshold for float rounding.
    let stop_f = ratio::to_f64(stop) * 0.5;
    let cap = bound.saturating_mul(2).saturating_add(1000);
    let mut v = vec![0.0f64; n];
    let mut current = step_f64(&tables, &v);
    let mut iterations = 1u64;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    // Value iteration interleaved with policy-evaluation jumps: the pair that
    // is optimal in the current stage games is evaluated exactly and its
    // payoff replaces the iterate whenever that lowers the residual. Only the
    // residual matters for the certificate, so the jumps cannot hurt
    // soundness, and they turn the 1/β iteration count into a handful of
    // evaluations in practice.
    while current.1 > stop_f && iterations < cap {
        if current.1 < best * 0.999 {
            best = current.1;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 200 && best < 1e-12 * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
                break;
            }
        }
        let jump = evaluate_pair_f64(&tables, &current.2).map(|w| {
            let stepped = step_f64(&tables, &w);
            (w, stepped)
        });
        iterations += 1;
        match jump {
            Some((w, stepped)) if stepped.1 < current.1 => {
                v = w;
                current = stepped;
            }
            _ => {
                v = std::mem::take(&mut current.0);
                current = step_f64(&tables, &v);
            }
        }
    }
    // Certify with exact Shapley steps from the float iterate.
    let start = Valuation(current.0.iter().map(|&x| ratio::from_f64(x)).collect());
    let mut sol = certify(g, beta, start, iterations)?;
    let mut extra = 0;
    while sol.error_bound > *tol && extra < 16 {
        let from = sol.valuation.clone();
        sol = certify(g, beta, from, sol.iterations)?;
        extra += 1;
    }
    Ok(sol)
}

fn certify(g: &StochasticGame, beta: &Rational, v: Valuation, iterations: u64) -> Result<DiscountedSolution, SolverError> {
    let (next, x, y) = shapley_operator(g, beta, &v)?;
    let residual = next.sup_distance(&v);
    let error_bound = &residual * (Rational::one() - beta) / beta;
    Ok(DiscountedSolution {
        beta: beta.clone(),
        valuation: next,
        strategy1: x,
        strategy2: y,
        residual,
        error_bound,
        iterations: iterations + 1,
        mode: IterationMode::Numeric,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameBuilder;
    use crate::ratio::{frac, int};

    fn constant(c: Rational) -> StochasticGame {
        GameBuilder::new(1)
            .moves(0, &["a"], &["b"])
            .entry(0, "a", "b", c, &[(0, int(1))])
            .build()
            .unwrap()
    }

    fn pennies() -> StochasticGame {
        let mut b = GameBuilder::new(1).moves(0, &["h", "t"], &["h", "t"]);
        for (a, c, r) in [("h", "h", 1), ("h", "t", -1), ("t", "h", -1), ("t", "t", 1)] {
            b = b.entry(0, a, c, int(r), &[(0, int(1))]);
        }
        b.build().unwrap()
    }

    /// Live state 0; absorbing states 1 (reward 0) and 2 (reward 1).
    fn big_match() -> StochasticGame {
        GameBuilder::new(3)
            .moves(0, &["stay", "quit"], &["left", "right"])
            .moves(1, &["-"], &["-"])
            .moves(2, &["-"], &["-"])
            .entry(0, "stay", "left", int(1), &[(0, int(1))])
            .entry(0, "stay", "right", int(0), &[(0, int(1))])
            .entry(0, "quit", "left", int(0), &[(1, int(1))])
            .entry(0, "quit", "right", int(1), &[(2, int(1))])
            .entry(1, "-", "-", int(0), &[(1, int(1))])
            .entry(2, "-", "-", int(1), &[(2, int(1))])
            .build()
            .unwrap()
    }

    #[test]
    fn operator_on_constant_game() {
        let g = constant(int(3));
        let beta = frac(1, 4);
        let (out, _, _) = shapley_operator(&g, &beta, &Valuation(vec![int(7)])).unwrap();
        assert_eq!(out[0], &beta * int(3) + (int(1) - &beta) * int(7));
    }

    #[test]
    fn operator_on_pennies() {
        let (out, x, _) = shapley_operator(&pennies(), &frac(1, 3), &Valuation::zeros(1)).unwrap();
        assert_eq!(out[0], int(0));
        assert_eq!(x.at(0), &[frac(1, 2), frac(1, 2)]);
    }

    #[test]
    fn operator_on_big_match() {
        let g = big_match();
        let beta = frac(1, 3);
        let v = Valuation(vec![frac(1, 2), int(0), int(1)]);
        let m = stage_game(&g, &beta, &v, 0);
        let stay = int(1) - &beta;
        assert_eq!(*m.entry(0, 0), &beta + &stay / int(2));
        assert_eq!(*m.entry(0, 1), &stay / int(2));
        assert_eq!(*m.entry(1, 0), int(0));
        assert_eq!(*m.entry(1, 1), int(1));
        let (out, _, _) = shapley_operator(&g, &beta, &v).unwrap();
        assert_eq!(out[0], frac(1, 2));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = constant(int(1));
        for beta in [int(0), int(1), frac(-1, 2), frac(3, 2)] {
            assert!(matches!(
                shapley_operator(&g, &beta, &Valuation::zeros(1)),
                Err(SolverError::InvalidBeta(_))
            ));
        }
        assert!(matches!(
            shapley_operator(&g, &frac(1, 2), &Valuation::zeros(2)),
            Err(SolverError::ValuationLength { .. })
        ));
        assert!(matches!(
            discounted_value(&g, &frac(1, 2), &int(0)),
            Err(SolverError::InvalidTolerance(_))
        ));
    }

    #[test]
    fn iteration_bound_examples() {
        assert_eq!(iteration_bound(&frac(1, 2), &int(1), &int(0)).unwrap(), 0);
        assert_eq!(iteration_bound(&frac(1, 2), &int(1), &int(1)).unwrap(), 0);
        assert_eq!(iteration_bound(&frac(1, 2), &frac(1, 8), &int(1)).unwrap(), 3);
        assert!(iteration_bound(&frac(1, 2), &int(1), &int(-1)).is_err());
    }

    #[test]
    fn iteration_bound_is_least() {
        for (beta, tol, span) in [(frac(1, 10), frac(1, 1000), int(3)), (frac(1, 7), frac(1, 50), frac(5, 2))] {
            let k = iteration_bound(&beta, &tol, &span).unwrap();
            let stay = int(1) - &beta;
            let target = &tol * &beta / &stay;
            assert!(&span * num_traits::pow(stay.clone(), k as usize) <= target);
            assert!(&span * num_traits::pow(stay.clone(), k as usize - 1) > target);
        }
    }

    #[test]
    fn constant_and_pennies_values() {
        for beta in [frac(1, 2), frac(1, 10), frac(1, 100)] {
            let sol = discounted_value(&constant(frac(2, 3)), &beta, &frac(1, 1_000_000)).unwrap();
            assert!((&sol.valuation[0] - frac(2, 3)).abs() <= frac(1, 1_000_000));
            let sol = discounted_value(&pennies(), &beta, &frac(1, 1_000_000)).unwrap();
            assert_eq!(sol.valuation[0], int(0));
        }
    }

    #[test]
    fn big_match_is_one_half() {
        let tol = frac(1, 1_000_000);
        for beta in [frac(1, 2), frac(1, 10), frac(1, 100)] {
            for mode in [IterationMode::Numeric, IterationMode::Auto] {
                let cfg = SolverConfig { mode, ..Default::default() };
                let sol = discounted_value_with(&big_match(), &beta, &tol, &cfg).unwrap();
                assert!((&sol.valuation[0] - frac(1, 2)).abs() <= tol);
                assert!(sol.error_bound <= tol);
                assert_eq!(sol.valuation[2], int(1));
            }
        }
        let cfg = SolverConfig { mode: IterationMode::Exact, ..Default::default() };
        let sol = discounted_value_with(&big_match(), &frac(1, 2), &tol, &cfg).unwrap();
        assert_eq!(sol.mode, IterationMode::Exact);
        assert!((&sol.valuation[0] - frac(1, 2)).abs() <= tol);
    }
}
