//! Sentences stating that a discounted or limit-average value exceeds α.
//!
//! Atom itemization (one atom per line, `n` states, `p_s`/`q_s` moves):
//!
//! | conjunct                | encoding                      | atoms        |
//! |-------------------------|-------------------------------|--------------|
//! | `Σ_a x_s(a) − 1 = 0`    | `Eq`                          | 1 per state  |
//! | `Σ_b y_s(b) − 1 = 0`    | `Eq`                          | 1 per state  |
//! | `x_s(a) ≥ 0`            | `¬(x < 0)`                    | `p_s`        |
//! | `y_s(b) ≥ 0`            | `¬(y < 0)`                    | `q_s`        |
//! | `u_(s,b,1) ≥ 0`         | `−u ≤ 0` = `−u < 0 ∨ −u = 0`  | `2·q_s`      |
//! | `u_(s,a,2) ≤ 0`         | `u < 0 ∨ u = 0`               | `2·p_s`      |
//! | `v(s) − α > 0`          | `α − v(s) < 0`                | 1            |
//!
//! which totals `1 + Σ_s (3·p_s + 3·q_s + 2)`. The limit sentence adds
//! `β₁ > 0` as `−β₁ < 0`, `β₁ − β ≤ 0` as `¬(β − β₁ < 0)`, `β ≤ 0` as
//! `¬(−β < 0)` and `β₁ − β > 0` as `β − β₁ < 0`: four more atoms.

use num_traits::One;

use super::{Formula, Monomial, Polynomial, Var};
use crate::error::FormulaError;
use crate::game::StochasticGame;
use crate::ratio::Rational;

fn strategy_vars(g: &StochasticGame) -> (Vec<Var>, Vec<Var>, Vec<Var>) {
    let n = g.num_states();
    let xs = (0..n)
        .flat_map(|s| g.moves1(s).iter().map(move |&a| Var::x(s, g.action_name(a))))
        .collect();
    let ys = (0..n)
        .flat_map(|s| g.moves2(s).iter().map(move |&b| Var::y(s, g.action_name(b))))
        .collect();
    let vs = (0..n).map(Var::v).collect();
    (xs, ys, vs)
}

fn distribution_sum(vars: impl Iterator<Item = Var>) -> Polynomial {
    Polynomial::from_terms(
        vars.map(|v| Monomial::new(Rational::one(), &[(v, 1)]))
            .chain([Monomial::new(-Rational::one(), &[])]),
    )
}

/// Ψ: the strategy variables form distributions at every state.
pub fn build_psi(g: &StochasticGame) -> Formula {
    let mut parts = Vec::new();
    for s in 0..g.num_states() {
        parts.push(Formula::Eq(distribution_sum(
            g.moves1(s).iter().map(|&a| Var::x(s, g.action_name(a))),
        )));
    }
    for s in 0..g.num_states() {
        for &a in g.moves1(s) {
            parts.push(Formula::geq(Polynomial::var(Var::x(s, g.action_name(a)))));
        }
    }
    for s in 0..g.num_states() {
        parts.push(Formula::Eq(distribution_sum(
            g.moves2(s).iter().map(|&b| Var::y(s, g.action_name(b))),
        )));
    }
    for s in 0..g.num_states() {
        for &b in g.moves2(s) {
            parts.push(Formula::geq(Polynomial::var(Var::y(s, g.action_name(b)))));
        }
    }
    Formula::And(parts)
}

/// `β·Σ w(k)·r + (1−β)·Σ w(k)·Σ_t δ(t)·v(t) − v(s)` where `w` ranges over
/// one player's variables and the other player's move is fixed.
fn u_poly(g: &StochasticGame, s: usize, entries: impl Iterator<Item = (Var, usize, usize)>) -> Polynomial {
    let beta = Var::beta();
    let mut terms = vec![Monomial::new(-Rational::one(), &[(Var::v(s), 1)])];
    for (w, i, j) in entries {
        let r = g.reward(s, i, j);
        terms.push(Monomial::new(r.clone(), &[(beta.clone(), 1), (w.clone(), 1)]));
        for (t, p) in g.transition(s, i, j).iter().enumerate() {
            let vt = Var::v(t);
            terms.push(Monomial::new(p.clone(), &[(w.clone(), 1), (vt.clone(), 1)]));
            terms.push(Monomial::new(-p, &[(beta.clone(), 1), (w.clone(), 1), (vt, 1)]));
        }
    }
    Polynomial::from_terms(terms)
}

/// `u_(s,b,1)`, the payoff of column position `j` against `x_s`.
pub(crate) fn u_max(g: &StochasticGame, s: usize, j: usize) -> Polynomial {
    let vars = g.moves1(s).iter().enumerate().map(|(i, &a)| (Var::x(s, g.action_name(a)), i, j));
    u_poly(g, s, vars.collect::<Vec<_>>().into_iter())
}

/// `u_(s,a,2)`, the payoff of row position `i` against `y_s`.
pub(crate) fn u_min(g: &StochasticGame, s: usize, i: usize) -> Polynomial {
    let vars = g.moves2(s).iter().enumerate().map(|(j, &b)| (Var::y(s, g.action_name(b)), i, j));
    u_poly(g, s, vars.collect::<Vec<_>>().into_iter())
}

fn saddle_constraints(g: &StochasticGame) -> Vec<Formula> {
    let mut out = Vec::new();
    for s in 0..g.num_states() {
        for j in 0..g.moves2(s).len() {
            out.push(Formula::leq(u_max(g, s, j).neg()));
        }
    }
    for s in 0..g.num_states() {
        for i in 0..g.moves1(s).len() {
            out.push(Formula::leq(u_min(g, s, i)));
        }
    }
    out
}

fn exceeds(s: usize, alpha: Polynomial) -> Formula {
    Formula::Lt(alpha.sub(&Polynomial::var(Var::v(s))))
}

fn check_state(g: &StochasticGame, s: usize) -> Result<(), FormulaError> {
    if s < g.num_states() {
        Ok(())
    } else {
        Err(FormulaError::UnknownState(s + 1))
    }
}

fn discounted_body(g: &StochasticGame, s: usize, alpha: Polynomial) -> (Vec<Var>, Formula, Formula) {
    let (xs, ys, vs) = strategy_vars(g);
    let vars = xs.into_iter().chain(ys).chain(vs).collect();
    (vars, Formula::And(saddle_constraints(g)), exceeds(s, alpha))
}

/// Φ_β(s, α) with `β` free.
pub fn build_discounted_sentence(g: &StochasticGame, s: usize, alpha: &Rational) -> Result<Formula, FormulaError> {
    check_state(g, s)?;
    let (vars, saddle, tail) = discounted_body(g, s, Polynomial::constant(alpha.clone()));
    Ok(Formula::exists(vars, Formula::And(vec![build_psi(g), saddle, tail])))
}

fn value_sentence(g: &StochasticGame, s: usize, alpha: Polynomial) -> Formula {
    let beta = Polynomial::var(Var::beta());
    let beta1 = Polynomial::var(Var::beta1());
    let (vars, saddle, tail) = discounted_body(g, s, alpha);
    let Formula::And(mut saddle) = saddle else { unreachable!() };
    saddle.insert(0, Formula::Lt(beta.sub(&beta1)));
    let window = Formula::Or(vec![
        Formula::geq(beta.sub(&beta1)),
        Formula::geq(beta.neg()),
        Formula::And(saddle),
    ]);
    let body = Formula::And(vec![build_psi(g), Formula::Lt(beta1.neg()), window, tail]);
    Formula::exists(
        vec![Var::beta1()],
        Formula::forall(vec![Var::beta()], Formula::exists(vars, body)),
    )
}

/// Φ(s, α): the limit-average value at `s` exceeds `α`. Closed.
pub fn build_value_sentence(g: &StochasticGame, s: usize, alpha: &Rational) -> Result<Formula, FormulaError> {
    check_state(g, s)?;
    Ok(value_sentence(g, s, Polynomial::constant(alpha.clone())))
}

/// Φ(s, α) with `alpha` left as a free variable, for parametric queries.
pub fn build_value_sentence_parametric(g: &StochasticGame, s: usize) -> Result<Formula, FormulaError> {
    check_state(g, s)?;
    Ok(value_sentence(g, s, Polynomial::var(Var::alpha())))
}
