use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{Coeff, Formula, Quantifier};
use crate::ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffRing {
    Integer,
    Rational,
    Symbolic,
}

impl fmt::Display for CoeffRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoeffRing::Integer => "integer",
            CoeffRing::Rational => "rational",
            CoeffRing::Symbolic => "symbolic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuantifierBlock {
    #[serde(serialize_with = "quantifier_name")]
    pub kind: Quantifier,
    pub size: usize,
}

fn quantifier_name<S: serde::Serializer>(q: &Quantifier, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match q {
        Quantifier::Exists => "exists",
        Quantifier::Forall => "forall",
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormulaCensus {
    /// Atom occurrences.
    pub m: usize,
    /// Atoms that differ as (relation, polynomial) pairs.
    pub distinct_atoms: usize,
    /// Quantified variables.
    pub k: usize,
    /// Quantifier blocks in preorder, directly nested same-kind blocks merged.
    pub blocks: Vec<QuantifierBlock>,
    pub d: u32,
    pub len: u64,
    /// `len` plus the bits of every coefficient occurrence; `None` when a
    /// coefficient is symbolic.
    pub size_bits: Option<u64>,
    pub coeff_ring: CoeffRing,
}

pub fn census(f: &Formula) -> FormulaCensus {
    let mut m = 0;
    let mut distinct = BTreeSet::new();
    let mut d = 0;
    let mut bits = Some(0u64);
    let mut ring = CoeffRing::Integer;
    collect_atoms(f, &mut |eq, p| {
        m += 1;
        distinct.insert((eq, p));
        d = d.max(p.degree());
        for c in p.coefficients() {
            match c {
                Coeff::Rational(q) => {
                    if let Some(b) = bits.as_mut() {
                        *b += ratio::rational_bits(q);
                    }
                    if !ratio::is_integer(q) && ring == CoeffRing::Integer {
                        ring = CoeffRing::Rational;
                    }
                }
                Coeff::Symbol(_) => {
                    bits = None;
                    ring = CoeffRing::Symbolic;
                }
            }
        }
    });
    let mut blocks = Vec::new();
    collect_blocks(&f.clone().merge_blocks(), &mut blocks);
    let len = len(f);
    FormulaCensus {
        m,
        distinct_atoms: distinct.len(),
        k: blocks.iter().map(|b| b.size).sum(),
        blocks,
        d,
        len,
        size_bits: bits.map(|b| b + len),
        coeff_ring: ring,
    }
}

fn collect_atoms<'a>(f: &'a Formula, visit: &mut impl FnMut(bool, &'a super::Polynomial)) {
    match f {
        Formula::Lt(p) => visit(false, p),
        Formula::Eq(p) => visit(true, p),
        Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => collect_atoms(g, visit),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| collect_atoms(g, visit)),
    }
}

fn collect_blocks(f: &Formula, out: &mut Vec<QuantifierBlock>) {
    match f {
        Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
            let kind = if matches!(f, Formula::Exists(..)) { Quantifier::Exists } else { Quantifier::Forall };
            out.push(QuantifierBlock { kind, size: vs.len() });
            collect_blocks(g, out);
        }
        Formula::Not(g) => collect_blocks(g, out),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| collect_blocks(g, out)),
        Formula::Lt(_) | Formula::Eq(_) => {}
    }
}

/// Length by the usual recursion: atoms add 2 to their polynomial, `¬` adds
/// 1, each binary connective adds 1 and each quantified variable adds 2.
pub(crate) fn len(f: &Formula) -> u64 {
    match f {
        Formula::Lt(p) | Formula::Eq(p) => p.len() + 2,
        Formula::Not(g) => len(g) + 1,
        Formula::And(gs) | Formula::Or(gs) => {
            if gs.is_empty() {
                1
            } else {
                gs.iter().map(len).sum::<u64>() + gs.len() as u64 - 1
            }
        }
        Formula::Exists(vs, g) | Formula::Forall(vs, g) => len(g) + 2 * vs.len() as u64,
    }
}
