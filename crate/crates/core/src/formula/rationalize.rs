use std::collections::BTreeMap;

use num_traits::One;

use super::{Coeff, Formula, Monomial, Polynomial, Var};
use crate::error::FormulaError;
use crate::ratio::{self, Rational};

/// Replaces every non-integer coefficient `ℓ = q₁/q₂` by a fresh variable
/// `z_ℓ` constrained by `q₂·z_ℓ − q₁ = 0`. One variable per distinct value,
/// numbered in increasing order of value. The new variables join the first
/// existential block below the leading `∃β₁ ∀β` style prefix, or a new
/// innermost existential block when the prefix ends universally.
pub fn rationalize(f: &Formula) -> Result<Formula, FormulaError> {
    f.check_no_symbols(FormulaError::SymbolicRationalize)?;
    let mut values: Vec<Rational> = Vec::new();
    f.visit_atoms(&mut |p| {
        for c in p.coefficients() {
            if let Coeff::Rational(q) = c {
                if !ratio::is_integer(q) {
                    values.push(q.clone());
                }
            }
        }
    });
    if values.is_empty() {
        return Ok(f.clone());
    }
    values.sort();
    values.dedup();

    let mut first = 1;
    collect_z(f, &mut first);
    let table: BTreeMap<Rational, Var> = values
        .iter()
        .enumerate()
        .map(|(k, q)| (q.clone(), Var::z(first + k)))
        .collect();

    let replaced = f.map_polys(&|p| {
        Polynomial::from_terms(p.terms().iter().map(|m| match &m.coeff {
            Coeff::Rational(q) if !ratio::is_integer(q) => {
                let mut powers = m.powers.clone();
                *powers.entry(table[q].clone()).or_insert(0) += 1;
                Monomial { powers, coeff: Coeff::Rational(Rational::one()) }
            }
            _ => m.clone(),
        }))
    });
    let defs: Vec<Formula> = table
        .iter()
        .map(|(q, z)| {
            let q2 = Rational::from_integer(q.denom().clone());
            let q1 = Rational::from_integer(q.numer().clone());
            Formula::Eq(Polynomial::from_terms([
                Monomial::new(q2, &[(z.clone(), 1)]),
                Monomial::new(-q1, &[]),
            ]))
        })
        .collect();
    Ok(attach(replaced, table.into_values().collect(), defs))
}

fn collect_z(f: &Formula, next: &mut usize) {
    let mut bump = |v: &Var| {
        if let Some(k) = v.z_index() {
            *next = (*next).max(k + 1);
        }
    };
    f.visit_atoms(&mut |p| p.vars().iter().for_each(&mut bump));
    fn binders(f: &Formula, bump: &mut impl FnMut(&Var)) {
        match f {
            Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
                vs.iter().for_each(&mut *bump);
                binders(g, bump);
            }
            Formula::Not(g) => binders(g, bump),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| binders(g, bump)),
            _ => {}
        }
    }
    binders(f, &mut bump);
}

fn conjoin(body: Formula, defs: Vec<Formula>) -> Formula {
    match body {
        Formula::And(mut parts) => {
            parts.extend(defs);
            Formula::And(parts)
        }
        other => {
            let mut parts = vec![other];
            parts.extend(defs);
            Formula::And(parts)
        }
    }
}

fn attach(f: Formula, zs: Vec<Var>, defs: Vec<Formula>) -> Formula {
    match f {
        Formula::Exists(vs, body) if !matches!(*body, Formula::Forall(..)) => {
            let mut all = zs;
            all.extend(vs);
            Formula::Exists(all, Box::new(conjoin(*body, defs)))
        }
        Formula::Exists(vs, body) => Formula::Exists(vs, Box::new(attach(*body, zs, defs))),
        Formula::Forall(vs, body) => Formula::Forall(vs, Box::new(attach(*body, zs, defs))),
        body => Formula::Exists(zs, Box::new(conjoin(body, defs))),
    }
}
