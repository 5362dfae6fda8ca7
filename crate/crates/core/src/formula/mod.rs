//! First-order formulas over polynomial atoms with real semantics.
//!
//! Atoms are `p < 0` and `p = 0`; every other comparison is written with
//! negation and disjunction before it reaches a [`Formula`], so lengths and
//! atom counts are unambiguous.

mod build;
mod census;
pub mod json;
mod rationalize;
pub mod smtlib;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

pub use build::{build_discounted_sentence, build_psi, build_value_sentence, build_value_sentence_parametric};
pub use census::{census, CoeffRing, FormulaCensus, QuantifierBlock};
pub use rationalize::rationalize;

use crate::error::FormulaError;
use crate::ratio::{self, Rational};

/// A variable name. Generated names follow `x[s][a]`, `y[s][b]`, `v[s]`,
/// `beta`, `beta1`, `alpha` and `z[k]`, with 1-based states.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn x(s: usize, action: &str) -> Self {
        Var(format!("x[{}][{}]", s + 1, action))
    }

    pub fn y(s: usize, action: &str) -> Self {
        Var(format!("y[{}][{}]", s + 1, action))
    }

    pub fn v(s: usize) -> Self {
        Var(format!("v[{}]", s + 1))
    }

    pub fn beta() -> Self {
        Var("beta".into())
    }

    pub fn beta1() -> Self {
        Var("beta1".into())
    }

    pub fn alpha() -> Self {
        Var("alpha".into())
    }

    pub fn z(k: usize) -> Self {
        Var(format!("z[{k}]"))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// The index `k` of a `z[k]` variable.
    pub(crate) fn z_index(&self) -> Option<usize> {
        self.0.strip_prefix("z[")?.strip_suffix(']')?.parse().ok()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A coefficient: an exact rational, or a named symbolic constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coeff {
    Rational(Rational),
    Symbol(String),
}

impl Coeff {
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Coeff::Rational(q) => Some(q),
            Coeff::Symbol(_) => None,
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeff::Rational(q) => f.write_str(&ratio::format_rational(q)),
            Coeff::Symbol(s) => f.write_str(s),
        }
    }
}

/// `coeff · Π var^exp`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub powers: BTreeMap<Var, u32>,
    pub coeff: Coeff,
}

impl Monomial {
    pub fn new(coeff: Rational, vars: &[(Var, u32)]) -> Self {
        Monomial {
            powers: collect_powers(vars),
            coeff: Coeff::Rational(coeff),
        }
    }

    pub fn symbolic(symbol: impl Into<String>, vars: &[(Var, u32)]) -> Self {
        Monomial {
            powers: collect_powers(vars),
            coeff: Coeff::Symbol(symbol.into()),
        }
    }

    pub fn degree(&self) -> u32 {
        self.powers.values().sum()
    }

    /// Degree plus number of variables plus one for the coefficient.
    pub fn len(&self) -> u64 {
        self.degree() as u64 + self.powers.len() as u64 + 1
    }
}

fn collect_powers(vars: &[(Var, u32)]) -> BTreeMap<Var, u32> {
    let mut powers = BTreeMap::new();
    for (v, e) in vars {
        if *e > 0 {
            *powers.entry(v.clone()).or_insert(0) += e;
        }
    }
    powers
}

/// A sum of monomials in canonical form: rational like terms merged, zero
/// terms dropped, terms sorted by their power products.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Polynomial {
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Monomial>) -> Self {
        let mut rational: BTreeMap<BTreeMap<Var, u32>, Rational> = BTreeMap::new();
        let mut symbolic = Vec::new();
        for m in terms {
            match m.coeff {
                Coeff::Rational(q) => {
                    *rational.entry(m.powers).or_insert_with(Rational::zero) += q;
                }
                Coeff::Symbol(_) => symbolic.push(m),
            }
        }
        let mut terms: Vec<Monomial> = rational
            .into_iter()
            .filter(|(_, q)| !q.is_zero())
            .map(|(powers, q)| Monomial { powers, coeff: Coeff::Rational(q) })
            .chain(symbolic)
            .collect();
        terms.sort();
        Polynomial { terms }
    }

    /// A single variable with coefficient 1.
    pub fn var(v: Var) -> Self {
        Self::from_terms([Monomial::new(Rational::one(), &[(v, 1)])])
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_terms([Monomial::new(c, &[])])
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms
            .iter()
            .flat_map(|m| m.powers.keys().cloned())
            .collect()
    }

    /// Sum of monomial lengths plus the number of monomials.
    pub fn len(&self) -> u64 {
        self.terms.iter().map(Monomial::len).sum::<u64>() + self.terms.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().map(|m| Monomial {
            powers: m.powers.clone(),
            coeff: match &m.coeff {
                Coeff::Rational(q) => Coeff::Rational(-q),
                Coeff::Symbol(s) => Coeff::Symbol(format!("-{s}")),
            },
        }))
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn coefficients(&self) -> impl Iterator<Item = &Coeff> + '_ {
        self.terms.iter().map(|m| &m.coeff)
    }

    /// Evaluates at a point; every variable must be bound and every
    /// coefficient rational.
    pub fn eval(&self, point: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let mut total = Rational::zero();
        for m in &self.terms {
            let mut term = m.coeff.as_rational()?.clone();
            for (v, e) in &m.powers {
                term *= num_traits::pow(point.get(v)?.clone(), *e as usize);
            }
            total += term;
        }
        Some(total)
    }

    pub(crate) fn rename(&self, f: &impl Fn(&Var) -> Var) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().map(|m| Monomial {
            powers: m.powers.iter().map(|(v, e)| (f(v), *e)).collect(),
            coeff: m.coeff.clone(),
        }))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, m) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}", m.coeff)?;
            for (v, e) in &m.powers {
                if *e == 1 {
                    write!(f, "·{v}")?;
                } else {
                    write!(f, "·{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Exists => "∃",
            Quantifier::Forall => "∀",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `p < 0`
    Lt(Polynomial),
    /// `p = 0`
    Eq(Polynomial),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Vec<Var>, Box<Formula>),
    Forall(Vec<Var>, Box<Formula>),
}

impl Formula {
    /// `p ≥ 0`, written `¬(p < 0)`.
    pub fn geq(p: Polynomial) -> Formula {
        Formula::Not(Box::new(Formula::Lt(p)))
    }

    /// `p ≤ 0`, written `p < 0 ∨ p = 0`.
    pub fn leq(p: Polynomial) -> Formula {
        Formula::Or(vec![Formula::Lt(p.clone()), Formula::Eq(p)])
    }

    /// `p > 0`, written `¬(p ≤ 0)`.
    pub fn gt(p: Polynomial) -> Formula {
        Formula::Not(Box::new(Formula::leq(p)))
    }

    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        Formula::Exists(vars, Box::new(body))
    }

    pub fn forall(vars: Vec<Var>, body: Formula) -> Formula {
        Formula::Forall(vars, Box::new(body))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a Var>, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Lt(p) | Formula::Eq(p) => {
                for v in p.vars() {
                    if !bound.contains(&&v) {
                        out.insert(v);
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_free(bound, out);
                }
            }
            Formula::Exists(vs, f) | Formula::Forall(vs, f) => {
                let before = bound.len();
                bound.extend(vs.iter());
                f.collect_free(bound, out);
                bound.truncate(before);
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Polynomials of all atoms, in preorder.
    pub fn atoms(&self) -> Vec<&Polynomial> {
        let mut out = Vec::new();
        self.visit_atoms(&mut |p| out.push(p));
        out
    }

    pub(crate) fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Polynomial)) {
        match self {
            Formula::Lt(p) | Formula::Eq(p) => f(p),
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.visit_atoms(f),
            Formula::And(gs) | Formula::Or(gs) => {
                for g in gs {
                    g.visit_atoms(f);
                }
            }
        }
    }

    pub(crate) fn map_polys(&self, f: &impl Fn(&Polynomial) -> Polynomial) -> Formula {
        match self {
            Formula::Lt(p) => Formula::Lt(f(p)),
            Formula::Eq(p) => Formula::Eq(f(p)),
            Formula::Not(g) => Formula::Not(Box::new(g.map_polys(f))),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_polys(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_polys(f)).collect()),
            Formula::Exists(vs, g) => Formula::Exists(vs.clone(), Box::new(g.map_polys(f))),
            Formula::Forall(vs, g) => Formula::Forall(vs.clone(), Box::new(g.map_polys(f))),
        }
    }

    /// Renames every variable, bound or free.
    pub fn rename_vars(&self, f: &impl Fn(&Var) -> Var) -> Formula {
        let renamed = self.map_polys(&|p| p.rename(f));
        renamed.rename_binders(f)
    }

    fn rename_binders(self, f: &impl Fn(&Var) -> Var) -> Formula {
        match self {
            Formula::Not(g) => Formula::Not(Box::new(g.rename_binders(f))),
            Formula::And(gs) => Formula::And(gs.into_iter().map(|g| g.rename_binders(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.into_iter().map(|g| g.rename_binders(f)).collect()),
            Formula::Exists(vs, g) => Formula::Exists(vs.iter().map(f).collect(), Box::new(g.rename_binders(f))),
            Formula::Forall(vs, g) => Formula::Forall(vs.iter().map(f).collect(), Box::new(g.rename_binders(f))),
            atom => atom,
        }
    }

    /// Merges directly nested blocks of the same quantifier.
    pub fn merge_blocks(self) -> Formula {
        match self {
            Formula::Exists(mut vs, body) => match body.merge_blocks() {
                Formula::Exists(inner, b) => {
                    vs.extend(inner);
                    Formula::Exists(vs, b)
                }
                other => Formula::Exists(vs, Box::new(other)),
            },
            Formula::Forall(mut vs, body) => match body.merge_blocks() {
                Formula::Forall(inner, b) => {
                    vs.extend(inner);
                    Formula::Forall(vs, b)
                }
                other => Formula::Forall(vs, Box::new(other)),
            },
            Formula::Not(g) => Formula::Not(Box::new(g.merge_blocks())),
            Formula::And(gs) => Formula::And(gs.into_iter().map(Formula::merge_blocks).collect()),
            Formula::Or(gs) => Formula::Or(gs.into_iter().map(Formula::merge_blocks).collect()),
            atom => atom,
        }
    }

    /// Truth value under an assignment to every variable the formula
    /// mentions. Quantified formulas cannot be evaluated this way.
    pub fn eval(&self, point: &BTreeMap<Var, Rational>) -> Option<bool> {
        Some(match self {
            Formula::Lt(p) => p.eval(point)? < Rational::zero(),
            Formula::Eq(p) => p.eval(point)?.is_zero(),
            Formula::Not(g) => !g.eval(point)?,
            Formula::And(gs) => {
                let mut all = true;
                for g in gs {
                    all &= g.eval(point)?;
                }
                all
            }
            Formula::Or(gs) => {
                let mut any = false;
                for g in gs {
                    any |= g.eval(point)?;
                }
                any
            }
            Formula::Exists(..) | Formula::Forall(..) => return None,
        })
    }

    pub(crate) fn check_no_symbols(&self, err: FormulaError) -> Result<(), FormulaError> {
        let mut symbolic = false;
        self.visit_atoms(&mut |p| {
            symbolic |= p.coefficients().any(|c| matches!(c, Coeff::Symbol(_)));
        });
        if symbolic {
            Err(err)
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, gs: &[Formula], op: &str| -> fmt::Result {
            f.write_str("(")?;
            for (k, g) in gs.iter().enumerate() {
                if k > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{g}")?;
            }
            f.write_str(")")
        };
        match self {
            Formula::Lt(p) => write!(f, "({p} < 0)"),
            Formula::Eq(p) => write!(f, "({p} = 0)"),
            Formula::Not(g) => write!(f, "¬{g}"),
            Formula::And(gs) => join(f, gs, "∧"),
            Formula::Or(gs) => join(f, gs, "∨"),
            Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
                let q = if matches!(self, Formula::Exists(..)) { "∃" } else { "∀" };
                let names: Vec<&str> = vs.iter().map(Var::name).collect();
                write!(f, "{q}{}. {g}", names.join(","))
            }
        }
    }
}

/// Text formats for closed sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    SmtLib,
    Json,
}

/// Deterministic text for a closed sentence with rational coefficients.
pub fn export_sentence(f: &Formula, format: ExportFormat) -> Result<String, FormulaError> {
    match format {
        ExportFormat::SmtLib => smtlib::export(f),
        ExportFormat::Json => json::export(f),
    }
}

pub fn parse_sentence(text: &str, format: ExportFormat) -> Result<Formula, FormulaError> {
    match format {
        ExportFormat::SmtLib => smtlib::parse(text),
        ExportFormat::Json => json::parse(text),
    }
}
