#![allow(dead_code)]

use limavg_core::game::{GameBuilder, StochasticGame};
use limavg_core::ratio::{frac, int, Rational};
use limavg_core::strategy::StationaryStrategy;
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn constant(c: Rational) -> StochasticGame {
    GameBuilder::new(1)
        .moves(0, &["a"], &["b"])
        .entry(0, "a", "b", c, &[(0, int(1))])
        .build()
        .unwrap()
}

pub fn pennies() -> StochasticGame {
    let mut b = GameBuilder::new(1).moves(0, &["h", "t"], &["h", "t"]);
    for (a, c, r) in [("h", "h", 1), ("h", "t", -1), ("t", "h", -1), ("t", "t", 1)] {
        b = b.entry(0, a, c, int(r), &[(0, int(1))]);
    }
    b.build().unwrap()
}

/// Live state 0; quitting absorbs in state 1 (reward 0) or state 2
/// (reward 1) depending on the column.
pub fn big_match_scaled(scale: i64) -> StochasticGame {
    GameBuilder::new(3)
        .moves(0, &["stay", "quit"], &["left", "right"])
        .moves(1, &["-"], &["-"])
        .moves(2, &["-"], &["-"])
        .entry(0, "stay", "left", int(scale), &[(0, int(1))])
        .entry(0, "stay", "right", int(0), &[(0, int(1))])
        .entry(0, "quit", "left", int(0), &[(1, int(1))])
        .entry(0, "quit", "right", int(scale), &[(2, int(1))])
        .entry(1, "-", "-", int(0), &[(1, int(1))])
        .entry(2, "-", "-", int(scale), &[(2, int(1))])
        .build()
        .unwrap()
}

pub fn big_match() -> StochasticGame {
    big_match_scaled(1)
}

/// A rational `p/q` with `|p| ≤ bound·q`, `q ∈ 1..=den`.
pub fn random_rational(rng: &mut impl Rng, bound: i64, den: i64) -> Rational {
    let q = rng.random_range(1..=den);
    frac(rng.random_range(-bound * q..=bound * q), q)
}

/// A probability vector of length `len` with small denominators; entries
/// may be zero.
pub fn random_distribution(rng: &mut impl Rng, len: usize, zero_chance: f64) -> Vec<Rational> {
    loop {
        let w: Vec<i64> = (0..len)
            .map(|_| if rng.random_bool(zero_chance) { 0 } else { rng.random_range(1..=4) })
            .collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w.into_iter().map(|x| frac(x, total)).collect();
        }
    }
}

const NAMES: [&str; 3] = ["a", "b", "c"];

/// Games with `n ≤ max_states` states and up to `max_moves` moves per
/// player and state. Rewards lie in `[-bound, bound]`.
pub fn random_game(rng: &mut impl Rng, max_states: usize, max_moves: usize, bound: i64) -> StochasticGame {
    let n = rng.random_range(1..=max_states);
    let shape: Vec<(usize, usize)> = (0..n)
        .map(|_| (rng.random_range(1..=max_moves), rng.random_range(1..=max_moves)))
        .collect();
    game_with_shape(rng, &shape, bound, 0.3)
}

pub fn game_with_shape(rng: &mut impl Rng, shape: &[(usize, usize)], bound: i64, zero_chance: f64) -> StochasticGame {
    let n = shape.len();
    let mut b = GameBuilder::new(n);
    for (s, &(p, q)) in shape.iter().enumerate() {
        b = b.moves(s, &NAMES[..p], &NAMES[..q]);
    }
    for (s, &(p, q)) in shape.iter().enumerate() {
        for a in &NAMES[..p] {
            for c in &NAMES[..q] {
                let d = random_distribution(rng, n, zero_chance);
                let dist: Vec<(usize, Rational)> =
                    d.into_iter().enumerate().filter(|(_, x)| !x.is_zero()).collect();
                b = b.entry(s, a, c, random_rational(rng, bound, 4), &dist);
            }
        }
    }
    b.build().unwrap()
}

/// A game whose transitions all have full support, so every stationary pair
/// induces an irreducible chain.
pub fn random_ergodic_game(rng: &mut impl Rng, max_states: usize, max_moves: usize) -> StochasticGame {
    let n = rng.random_range(1..=max_states);
    let shape: Vec<(usize, usize)> = (0..n)
        .map(|_| (rng.random_range(1..=max_moves), rng.random_range(1..=max_moves)))
        .collect();
    game_with_shape(rng, &shape, 1, 0.0)
}

pub fn random_strategies(rng: &mut impl Rng, g: &StochasticGame) -> (StationaryStrategy, StationaryStrategy) {
    use limavg_core::strategy::Role;
    let n = g.num_states();
    let x = (0..n).map(|s| random_distribution(rng, g.moves1(s).len(), 0.3)).collect();
    let y = (0..n).map(|s| random_distribution(rng, g.moves2(s).len(), 0.3)).collect();
    (
        StationaryStrategy::new(g, Role::Max, x).unwrap(),
        StationaryStrategy::new(g, Role::Min, y).unwrap(),
    )
}

/// Proptest strategy over random games, driven by a seed.
pub fn arb_game(max_states: usize, max_moves: usize, bound: i64) -> impl Strategy<Value = StochasticGame> {
    any::<u64>().prop_map(move |seed| random_game(&mut rng(seed), max_states, max_moves, bound))
}

pub fn arb_rational(bound: i64, den: i64) -> impl Strategy<Value = Rational> {
    (1..=den).prop_flat_map(move |q| (-bound * q..=bound * q).prop_map(move |p| frac(p, q)))
}

pub fn arb_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Vec<Vec<Rational>>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(p, q)| {
        proptest::collection::vec(proptest::collection::vec(arb_rational(5, 6), q), p)
    })
}
