//! Self-describing JSON syntax tree.
//!
//! Nodes carry a `tag` of `atom_lt`, `atom_eq`, `not`, `and`, `or`, `exists`
//! or `forall`. A polynomial lists its variables once and each term as a
//! coefficient string plus an exponent vector aligned with that list.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Coeff, Formula, Monomial, Polynomial, Var};
use crate::error::FormulaError;
use crate::ratio;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case", deny_unknown_fields)]
enum Node {
    AtomLt { poly: PolyNode },
    AtomEq { poly: PolyNode },
    Not { arg: Box<Node> },
    And { args: Vec<Node> },
    Or { args: Vec<Node> },
    Exists { vars: Vec<String>, body: Box<Node> },
    Forall { vars: Vec<String>, body: Box<Node> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyNode {
    vars: Vec<String>,
    terms: Vec<TermNode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermNode {
    coeff: String,
    exps: Vec<u32>,
}

fn poly_node(p: &Polynomial) -> Result<PolyNode, FormulaError> {
    let vars: Vec<Var> = p.vars().into_iter().collect();
    let terms = p
        .terms()
        .iter()
        .map(|m| {
            let Coeff::Rational(q) = &m.coeff else {
                return Err(FormulaError::SymbolicExport);
            };
            Ok(TermNode {
                coeff: ratio::format_rational(q),
                exps: vars.iter().map(|v| m.powers.get(v).copied().unwrap_or(0)).collect(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(PolyNode { vars: vars.into_iter().map(|v| v.0).collect(), terms })
}

fn node(f: &Formula) -> Result<Node, FormulaError> {
    let all = |gs: &[Formula]| gs.iter().map(node).collect::<Result<Vec<_>, _>>();
    let names = |vs: &[Var]| vs.iter().map(|v| v.0.clone()).collect();
    Ok(match f {
        Formula::Lt(p) => Node::AtomLt { poly: poly_node(p)? },
        Formula::Eq(p) => Node::AtomEq { poly: poly_node(p)? },
        Formula::Not(g) => Node::Not { arg: Box::new(node(g)?) },
        Formula::And(gs) => Node::And { args: all(gs)? },
        Formula::Or(gs) => Node::Or { args: all(gs)? },
        Formula::Exists(vs, g) => Node::Exists { vars: names(vs), body: Box::new(node(g)?) },
        Formula::Forall(vs, g) => Node::Forall { vars: names(vs), body: Box::new(node(g)?) },
    })
}

fn poly(p: PolyNode) -> Result<Polynomial, FormulaError> {
    let vars: Vec<Var> = p.vars.into_iter().map(Var).collect();
    let terms = p
        .terms
        .into_iter()
        .map(|t| {
            if t.exps.len() != vars.len() {
                return Err(FormulaError::Parse("exponent vector length mismatch".into()));
            }
            let coeff = ratio::parse_rational(&t.coeff).map_err(|e| FormulaError::Parse(e.to_string()))?;
            let powers: BTreeMap<Var, u32> = vars
                .iter()
                .zip(t.exps)
                .filter(|(_, e)| *e > 0)
                .map(|(v, e)| (v.clone(), e))
                .collect();
            Ok(Monomial { powers, coeff: Coeff::Rational(coeff) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Polynomial::from_terms(terms))
}

fn formula(n: Node) -> Result<Formula, FormulaError> {
    let all = |ns: Vec<Node>| ns.into_iter().map(formula).collect::<Result<Vec<_>, _>>();
    let vars = |vs: Vec<String>| vs.into_iter().map(Var).collect();
    Ok(match n {
        Node::AtomLt { poly: p } => Formula::Lt(poly(p)?),
        Node::AtomEq { poly: p } => Formula::Eq(poly(p)?),
        Node::Not { arg } => Formula::Not(Box::new(formula(*arg)?)),
        Node::And { args } => Formula::And(all(args)?),
        Node::Or { args } => Formula::Or(all(args)?),
        Node::Exists { vars: vs, body } => Formula::exists(vars(vs), formula(*body)?),
        Node::Forall { vars: vs, body } => Formula::forall(vars(vs), formula(*body)?),
    })
}

/// Pretty-printed JSON for a closed sentence.
pub fn export(f: &Formula) -> Result<String, FormulaError> {
    let free: Vec<String> = f.free_vars().into_iter().map(|v| v.0).collect();
    if !free.is_empty() {
        return Err(FormulaError::FreeVariables(free));
    }
    to_json(f)
}

/// JSON for any formula, open or closed.
pub fn to_json(f: &Formula) -> Result<String, FormulaError> {
    let mut text = serde_json::to_string_pretty(&node(f)?).expect("serializable");
    text.push('\n');
    Ok(text)
}

pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let n: Node = serde_json::from_str(text).map_err(|e| FormulaError::Parse(e.to_string()))?;
    formula(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{frac, int};

    #[test]
    fn round_trip() {
        let x = Var::new("x");
        let p = Polynomial::from_terms([
            Monomial::new(frac(5, 2), &[(x.clone(), 3), (Var::beta(), 1)]),
            Monomial::new(int(-1), &[]),
        ]);
        let f = Formula::exists(vec![x, Var::beta()], Formula::And(vec![Formula::gt(p.clone()), Formula::Eq(p)]));
        let text = export(&f).unwrap();
        assert!(text.contains("\"tag\": \"atom_lt\""));
        let back = parse(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(export(&back).unwrap(), text);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(parse(r#"{"tag":"atom_lt","poly":{"vars":["x"],"terms":[{"coeff":"1","exps":[]}]}}"#).is_err());
        assert!(parse(r#"{"tag":"xor","args":[]}"#).is_err());
    }
}
