mod common;

use common::{big_match, big_match_scaled, constant, pennies, rng};
use limavg_core::approx::{
    approximate_value, approximate_value_unnormalized, binary_search, decide_threshold, geometric_schedule,
    vanishing_discount_estimate, OracleConfig, ThresholdOracle, Verdict,
};
use limavg_core::ApproxError;
use limavg_core::chain::{induced_chain, long_run_average};
use limavg_core::game::{GameBuilder, StochasticGame};
use limavg_core::ratio::{ceil_log2_recip, frac, int, pow2, Rational};
use limavg_core::strategy::{Role, StationaryStrategy};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

struct Hidden(Rational);

impl ThresholdOracle for Hidden {
    fn query(&mut self, m: &Rational) -> Result<Verdict, ApproxError> {
        Ok(Verdict::exact(self.0 > *m))
    }
}

fn arb_unit() -> impl Strategy<Value = Rational> {
    (1i64..=1000).prop_flat_map(|q| (0..=q).prop_map(move |p| frac(p, q)))
}

fn arb_epsilon() -> impl Strategy<Value = Rational> {
    (2i64..=1000).prop_flat_map(|q| (1..q).prop_map(move |p| frac(p, q)))
}

proptest! {
    #[test]
    fn synthetic_oracle_is_sound(h in arb_unit(), eps in arb_epsilon()) {
        let r = binary_search(&mut Hidden(h.clone()), &eps).unwrap();
        prop_assert_eq!(r.iterations, ceil_log2_recip(&eps));
        prop_assert!(r.lower <= h && h <= r.upper);
        prop_assert_eq!(&r.upper - &r.lower, Rational::new(1.into(), pow2(r.iterations)));
        prop_assert!(&r.upper - &r.lower <= &eps * int(2));
        prop_assert!(!r.heuristic);
    }

    #[test]
    fn transcript_follows_binary_expansion(h in arb_unit(), k in 1u32..=12) {
        let eps = Rational::new(1.into(), pow2(k));
        let r = binary_search(&mut Hidden(h.clone()), &eps).unwrap();
        let (mut l, mut u) = (Rational::zero(), Rational::one());
        for (i, q) in r.transcript.iter().enumerate() {
            let scale = Rational::from_integer(pow2(i as u32 + 1));
            prop_assert_eq!(&q.midpoint, &((&l + &u) / int(2)));
            // With strict comparisons the search keeps l < h ≤ u, so after
            // i steps u = ⌈h·2^i⌉/2^i (or 2^-i when h = 0).
            let top = (&h * &scale).ceil().max(Rational::one());
            u = &top / &scale;
            l = (&top - Rational::one()) / &scale;
            prop_assert_eq!(q.verdict, h > q.midpoint);
        }
        prop_assert_eq!((r.lower, r.upper), (l, u));
    }
}

#[test]
fn estimates_for_simple_games() {
    let cfg = OracleConfig::default();
    let e = vanishing_discount_estimate(&constant(frac(2, 7)), 0, &cfg).unwrap();
    assert_eq!(e.value, frac(2, 7));
    assert_eq!(e.table[0].1, frac(2, 7));
    let (g, _) = limavg_core::game::normalize(&pennies());
    assert_eq!(vanishing_discount_estimate(&g, 0, &cfg).unwrap().value, frac(1, 2));
    let e = vanishing_discount_estimate(&big_match(), 0, &cfg).unwrap();
    assert!((e.value.clone() - frac(1, 2)) <= cfg.discount_tol && (frac(1, 2) - e.value) <= cfg.discount_tol);
    assert!(e.stabilized);
}

#[test]
fn threshold_decisions() {
    let cfg = OracleConfig::default();
    let (v, _) = decide_threshold(&big_match(), 0, &frac(1, 4), &cfg).unwrap();
    assert!(v.holds && v.certain);
    let (v, _) = decide_threshold(&big_match(), 0, &frac(3, 4), &cfg).unwrap();
    assert!(!v.holds && v.certain);
    let (v, _) = decide_threshold(&big_match(), 0, &frac(1, 2), &cfg).unwrap();
    assert!(!v.certain);
}

#[test]
fn big_match_interval() {
    let r = approximate_value(&big_match(), 0, &frac(1, 64), &OracleConfig::default()).unwrap();
    assert_eq!(r.iterations, 6);
    assert!(r.lower <= frac(1, 2) && frac(1, 2) <= r.upper);
    assert_eq!(&r.upper - &r.lower, frac(1, 64));
    // The first query sits on the value itself.
    assert!(r.heuristic);
    assert!(r.enclosure.0 <= r.lower && r.upper <= r.enclosure.1);
}

#[test]
fn scaled_big_match_contains_five() {
    let r = approximate_value_unnormalized(&big_match_scaled(10), 0, &frac(1, 16), &OracleConfig::default()).unwrap();
    assert!(r.lower <= int(5) && int(5) <= r.upper, "[{}, {}]", r.lower, r.upper);
    assert!(&r.upper - &r.lower <= frac(1, 8));
}

#[test]
fn rejects_bad_inputs() {
    let cfg = OracleConfig::default();
    assert!(approximate_value(&big_match(), 0, &int(0), &cfg).is_err());
    assert!(approximate_value(&big_match(), 0, &int(1), &cfg).is_err());
    assert!(approximate_value(&big_match_scaled(2), 0, &frac(1, 4), &cfg).is_err());
    assert!(approximate_value(&big_match(), 7, &frac(1, 4), &cfg).is_err());
    let empty = OracleConfig { beta_schedule: Vec::new(), ..cfg };
    assert!(matches!(vanishing_discount_estimate(&big_match(), 0, &empty), Err(ApproxError::EmptySchedule)));
}

/// Two states; each state is controlled by one player and every move leads
/// deterministically to one of the states.
fn turn_based(rng: &mut impl Rng) -> StochasticGame {
    let mut b = GameBuilder::new(2)
        .moves(0, &["a", "b"], &["-"])
        .moves(1, &["-"], &["c", "d"]);
    for a in ["a", "b"] {
        b = b.entry(0, a, "-", int(rng.random_range(0..=4)), &[(rng.random_range(0..2), int(1))]);
    }
    for c in ["c", "d"] {
        b = b.entry(1, "-", c, int(rng.random_range(0..=4)), &[(rng.random_range(0..2), int(1))]);
    }
    b.build().unwrap()
}

/// max over pure stationary strategies of player 1 of the min over those of
/// player 2; pure stationary strategies are optimal when every state is
/// controlled by one player.
fn brute_force_value(g: &StochasticGame, s: usize) -> Rational {
    let pure = |role: Role, choice: [usize; 2]| {
        let dists = (0..2)
            .map(|t| {
                let len = match role {
                    Role::Max => g.moves1(t).len(),
                    Role::Min => g.moves2(t).len(),
                };
                (0..len).map(|k| if k == choice[t] % len { int(1) } else { int(0) }).collect()
            })
            .collect();
        StationaryStrategy::new(g, role, dists).unwrap()
    };
    let choices = [[0, 0], [1, 0], [0, 1], [1, 1]];
    choices
        .iter()
        .map(|&cx| {
            let x = pure(Role::Max, cx);
            choices
                .iter()
                .map(|&cy| long_run_average(&induced_chain(g, &x, &pure(Role::Min, cy)).unwrap(), s).unwrap())
                .min()
                .unwrap()
        })
        .max()
        .unwrap()
}

#[test]
fn perfect_information_cycle_means() {
    let mut r = rng(8);
    let cfg = OracleConfig { beta_schedule: geometric_schedule(20), ..OracleConfig::default() };
    for _ in 0..6 {
        let g = turn_based(&mut r);
        for s in 0..2 {
            let truth = brute_force_value(&g, s);
            let res = approximate_value_unnormalized(&g, s, &frac(1, 16), &cfg).unwrap();
            assert!(
                res.lower <= truth && truth <= res.upper,
                "state {s}: {truth} not in [{}, {}]",
                res.lower,
                res.upper
            );
        }
    }
}
