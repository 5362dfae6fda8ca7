mod common;

use common::{constant, game_with_shape, random_game, rng};
use limavg_core::formula::{
    build_discounted_sentence, build_psi, build_value_sentence, census, export_sentence, parse_sentence, rationalize,
    CoeffRing, ExportFormat, Formula, Monomial, Polynomial, Quantifier, Var,
};
use limavg_core::game::{size_metrics, GameBuilder, StochasticGame};
use limavg_core::ratio::{frac, int};
use proptest::prelude::*;

fn expected_atoms(g: &StochasticGame) -> usize {
    1 + (0..g.num_states()).map(|s| 3 * g.moves1(s).len() + 3 * g.moves2(s).len() + 2).sum::<usize>()
}

fn arb_shape() -> impl Strategy<Value = Vec<(usize, usize)>> {
    proptest::collection::vec((1usize..=3, 1usize..=3), 1..=3)
}

/// The same game with states listed in a different order.
fn relabel(g: &StochasticGame, perm: &[usize]) -> StochasticGame {
    let mut desc = g.to_description();
    let map = |s: usize| perm[s - 1] + 1;
    let mut moves1 = desc.moves1.clone();
    let mut moves2 = desc.moves2.clone();
    for s in 0..perm.len() {
        moves1[perm[s]] = desc.moves1[s].clone();
        moves2[perm[s]] = desc.moves2[s].clone();
    }
    desc.moves1 = moves1;
    desc.moves2 = moves2;
    for t in &mut desc.transitions {
        t.s = map(t.s);
        for d in &mut t.dist {
            d.t = map(d.t);
        }
    }
    for r in &mut desc.rewards {
        r.s = map(r.s);
    }
    StochasticGame::from_description(&desc).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn atom_counts(shape in arb_shape(), seed in any::<u64>()) {
        let g = game_with_shape(&mut rng(seed), &shape, 3, 0.3);
        let alpha = frac(1, 3);
        let phi_beta = census(&build_discounted_sentence(&g, 0, &alpha).unwrap());
        let phi = census(&build_value_sentence(&g, 0, &alpha).unwrap());
        prop_assert_eq!(phi_beta.m, expected_atoms(&g));
        prop_assert_eq!(phi.m, phi_beta.m + 4);
        prop_assert!(phi_beta.d <= 3 && phi.d <= 3);
        let hat = census(&rationalize(&build_value_sentence(&g, 0, &alpha).unwrap()).unwrap());
        prop_assert!(hat.d <= 4);
        prop_assert_eq!(hat.coeff_ring, CoeffRing::Integer);
    }

    #[test]
    fn census_scales_linearly(shape in arb_shape(), seed in any::<u64>()) {
        let g = game_with_shape(&mut rng(seed), &shape, 3, 0.3);
        let delta = size_metrics(&g).delta_entries;
        let c = census(&build_value_sentence(&g, 0, &int(0)).unwrap());
        // 3p + 3q ≤ 3·pq + 3 per state, plus the fixed atoms.
        prop_assert!(c.m <= 6 * delta + 5 * g.num_states() + 5);
        // x, y and v variables plus β, β₁.
        prop_assert!(c.k <= 2 * delta + g.num_states() + 2);
        prop_assert_eq!(c.k, c.blocks.iter().map(|b| b.size).sum::<usize>());
    }

    #[test]
    fn rationalize_is_idempotent(seed in any::<u64>()) {
        let g = random_game(&mut rng(seed), 2, 2, 3);
        let hat = rationalize(&build_value_sentence(&g, 0, &frac(-2, 7)).unwrap()).unwrap();
        prop_assert_eq!(rationalize(&hat).unwrap(), hat);
    }

    #[test]
    fn length_ignores_names(seed in any::<u64>()) {
        let g = random_game(&mut rng(seed), 3, 2, 2);
        let f = build_value_sentence(&g, 0, &frac(1, 2)).unwrap();
        let renamed = f.rename_vars(&|v: &Var| Var::new(format!("renamed_{}", v.name())));
        prop_assert_eq!(census(&renamed).len, census(&f).len);
    }

    #[test]
    fn census_ignores_state_order(seed in any::<u64>()) {
        let g = random_game(&mut rng(seed), 3, 2, 2);
        let n = g.num_states();
        let perm: Vec<usize> = (0..n).rev().collect();
        let h = relabel(&g, &perm);
        let a = census(&build_value_sentence(&g, 0, &frac(1, 2)).unwrap());
        let b = census(&build_value_sentence(&h, perm[0], &frac(1, 2)).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exports_round_trip(seed in any::<u64>(), rationalized in any::<bool>()) {
        let g = random_game(&mut rng(seed), 2, 2, 3);
        let mut f = build_value_sentence(&g, 0, &frac(3, 5)).unwrap();
        if rationalized {
            f = rationalize(&f).unwrap();
        }
        for format in [ExportFormat::SmtLib, ExportFormat::Json] {
            let text = export_sentence(&f, format).unwrap();
            let back = parse_sentence(&text, format).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(export_sentence(&back, format).unwrap(), text);
        }
    }
}

#[test]
fn psi_examples() {
    assert_eq!(census(&build_psi(&constant(int(0)))).m, 4);
    let g = game_with_shape(&mut rng(0), &[(2, 2)], 1, 0.0);
    let psi = build_psi(&g);
    let Formula::And(parts) = &psi else { panic!("conjunction expected") };
    let equalities = parts.iter().filter(|p| matches!(p, Formula::Eq(_))).count();
    assert_eq!((equalities, parts.len() - equalities), (2, 4));
    let g = game_with_shape(&mut rng(0), &[(1, 2), (3, 1)], 1, 0.0);
    assert_eq!(census(&build_psi(&g)).m, 2 * 2 + (1 + 2 + 3 + 1));
}

#[test]
fn sentence_shape() {
    let g = game_with_shape(&mut rng(4), &[(2, 2)], 2, 0.0);
    let phi_beta = build_discounted_sentence(&g, 0, &int(0)).unwrap();
    assert_eq!(census(&phi_beta).m, 15);
    assert_eq!(phi_beta.free_vars().into_iter().collect::<Vec<_>>(), vec![Var::beta()]);
    let phi = build_value_sentence(&g, 0, &int(0)).unwrap();
    let c = census(&phi);
    assert_eq!(c.m, 19);
    assert!(phi.is_sentence());
    let kinds: Vec<Quantifier> = c.blocks.iter().map(|b| b.kind).collect();
    assert_eq!(kinds, vec![Quantifier::Exists, Quantifier::Forall, Quantifier::Exists]);
    assert_eq!(c.blocks[0].size, 1);
    assert_eq!(c.blocks[1].size, 1);
}

#[test]
fn constant_game_sentence() {
    // u = β·c·w + w·v − β·w·v − v, for w = x (≥ 0) and w = y (≤ 0), and c − v < 0.
    let c = frac(2, 5);
    let g = constant(c.clone());
    let f = build_discounted_sentence(&g, 0, &c).unwrap();
    let v = Var::v(0);
    let u = |w: Var| {
        Polynomial::from_terms([
            Monomial::new(c.clone(), &[(Var::beta(), 1), (w.clone(), 1)]),
            Monomial::new(int(1), &[(w.clone(), 1), (v.clone(), 1)]),
            Monomial::new(int(-1), &[(Var::beta(), 1), (w.clone(), 1), (v.clone(), 1)]),
            Monomial::new(int(-1), &[(v.clone(), 1)]),
        ])
    };
    let atoms: Vec<&Polynomial> = f.atoms();
    assert!(atoms.contains(&&u(Var::x(0, "a")).neg()));
    assert!(atoms.contains(&&u(Var::y(0, "b"))));
    let tail = Polynomial::constant(c).sub(&Polynomial::var(v));
    assert_eq!(atoms.last(), Some(&&tail));
}

#[test]
fn worked_length_example() {
    let m = Monomial::new(frac(1, 4), &[(Var::new("x"), 3), (Var::new("y"), 2), (Var::new("z"), 1)]);
    assert_eq!(m.len(), 10);
    let p = Polynomial::from_terms([m]);
    assert_eq!(p.len(), 11);
    let atom = Formula::Lt(p.clone());
    assert_eq!(census(&atom).len, 13);
    assert_eq!(census(&Formula::Not(Box::new(atom))).len, 14);
    assert_eq!(census(&Formula::exists(vec![Var::new("x")], Formula::Eq(p))).len, 15);
}

#[test]
fn rationalized_value_sentence() {
    let g = GameBuilder::new(2)
        .moves(0, &["a", "b"], &["c"])
        .moves(1, &["a"], &["c"])
        .entry(0, "a", "c", frac(1, 3), &[(0, frac(1, 2)), (1, frac(1, 2))])
        .entry(0, "b", "c", frac(2, 3), &[(1, int(1))])
        .entry(1, "a", "c", int(1), &[(1, int(1))])
        .build()
        .unwrap();
    let phi = build_value_sentence(&g, 0, &frac(1, 2)).unwrap();
    assert_eq!(census(&phi).coeff_ring, CoeffRing::Rational);
    let hat = rationalize(&phi).unwrap();
    let c = census(&hat);
    assert_eq!(c.d, 4);
    // Distinct non-integer values: ±1/3, ±2/3, ±1/2.
    let zs = 6;
    assert_eq!(c.m, census(&phi).m + zs);
    assert_eq!(c.k, census(&phi).k + zs);
    // The z variables join the innermost existential block.
    assert_eq!(c.blocks.len(), 3);
    assert_eq!(c.blocks[2].size, census(&phi).blocks[2].size + zs);
}

#[test]
fn rejects_symbolic_and_open() {
    let sym = Formula::Lt(Polynomial::from_terms([Monomial::symbolic("r", &[(Var::new("x"), 1)])]));
    assert_eq!(rationalize(&sym).unwrap_err().to_string(), "cannot rationalize symbolic coefficients");
    let closed_sym = Formula::exists(vec![Var::new("x")], sym);
    assert!(export_sentence(&closed_sym, ExportFormat::SmtLib).is_err());
    let g = constant(int(0));
    let open = build_discounted_sentence(&g, 0, &int(0)).unwrap();
    assert!(export_sentence(&open, ExportFormat::Json).is_err());
}
