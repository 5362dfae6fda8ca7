//! SMT-LIB 2 text for quantified nonlinear real arithmetic.
//!
//! Variables are always written as quoted symbols `|name|`; rationals as
//! `(/ p q)` and negative integers as `(- n)`.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{Coeff, Formula, Monomial, Polynomial, Var};
use crate::error::FormulaError;
use crate::ratio::Rational;

fn symbol(v: &Var) -> Result<String, FormulaError> {
    if v.0.contains(['|', '\\']) {
        return Err(FormulaError::Parse(format!("variable name {:?} cannot be quoted", v.0)));
    }
    Ok(format!("|{}|", v.0))
}

fn integer(n: &BigInt) -> String {
    if n.is_negative() {
        format!("(- {})", -n)
    } else {
        n.to_string()
    }
}

pub fn rational_term(q: &Rational) -> String {
    if q.is_integer() {
        integer(q.numer())
    } else {
        format!("(/ {} {})", integer(q.numer()), q.denom())
    }
}

fn monomial(m: &Monomial) -> Result<String, FormulaError> {
    let Coeff::Rational(c) = &m.coeff else {
        return Err(FormulaError::SymbolicExport);
    };
    let mut factors = Vec::new();
    if !c.is_one() || m.powers.is_empty() {
        factors.push(rational_term(c));
    }
    for (v, e) in &m.powers {
        let s = symbol(v)?;
        for _ in 0..*e {
            factors.push(s.clone());
        }
    }
    Ok(if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        format!("(* {})", factors.join(" "))
    })
}

fn polynomial(p: &Polynomial) -> Result<String, FormulaError> {
    let terms = p.terms().iter().map(monomial).collect::<Result<Vec<_>, _>>()?;
    Ok(match terms.len() {
        0 => "0".to_string(),
        1 => terms.into_iter().next().unwrap(),
        _ => format!("(+ {})", terms.join(" ")),
    })
}

fn write_formula(f: &Formula, depth: usize, out: &mut String) -> Result<(), FormulaError> {
    let pad = "  ".repeat(depth);
    match f {
        Formula::Lt(p) => writeln!(out, "{pad}(< {} 0)", polynomial(p)?).unwrap(),
        Formula::Eq(p) => writeln!(out, "{pad}(= {} 0)", polynomial(p)?).unwrap(),
        Formula::Not(g) => {
            writeln!(out, "{pad}(not").unwrap();
            write_formula(g, depth + 1, out)?;
            writeln!(out, "{pad})").unwrap();
        }
        Formula::And(gs) | Formula::Or(gs) => {
            let (op, empty) = if matches!(f, Formula::And(_)) { ("and", "true") } else { ("or", "false") };
            if gs.is_empty() {
                writeln!(out, "{pad}{empty}").unwrap();
            } else {
                writeln!(out, "{pad}({op}").unwrap();
                for g in gs {
                    write_formula(g, depth + 1, out)?;
                }
                writeln!(out, "{pad})").unwrap();
            }
        }
        Formula::Exists(vs, g) | Formula::Forall(vs, g) => {
            let q = if matches!(f, Formula::Exists(..)) { "exists" } else { "forall" };
            let decls = vs
                .iter()
                .map(|v| Ok(format!("({} Real)", symbol(v)?)))
                .collect::<Result<Vec<_>, FormulaError>>()?;
            writeln!(out, "{pad}({q} ({})", decls.join(" ")).unwrap();
            write_formula(g, depth + 1, out)?;
            writeln!(out, "{pad})").unwrap();
        }
    }
    Ok(())
}

/// Formula text alone, without a surrounding script.
pub fn formula_text(f: &Formula) -> Result<String, FormulaError> {
    let mut out = String::new();
    write_formula(f, 1, &mut out)?;
    Ok(out)
}

/// A complete script asserting `f`. Free variables must be given values in
/// `bindings`; they are declared as constants and pinned by equalities.
pub fn write_script(
    f: &Formula,
    bindings: &[(Var, Rational)],
    comments: &[String],
) -> Result<String, FormulaError> {
    let free: Vec<String> = f
        .free_vars()
        .into_iter()
        .filter(|v| !bindings.iter().any(|(b, _)| b == v))
        .map(|v| v.0)
        .collect();
    if !free.is_empty() {
        return Err(FormulaError::FreeVariables(free));
    }
    f.check_no_symbols(FormulaError::SymbolicExport)?;
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            writeln!(out, "; {line}").unwrap();
        }
    }
    out.push_str("(set-logic NRA)\n");
    for (v, q) in bindings {
        writeln!(out, "(declare-const {} Real)", symbol(v)?).unwrap();
        writeln!(out, "(assert (= {} {}))", symbol(v)?, rational_term(q)).unwrap();
    }
    out.push_str("(assert\n");
    out.push_str(&formula_text(f)?);
    out.push_str(")\n(check-sat)\n");
    Ok(out)
}

/// Exports a closed sentence.
pub fn export(f: &Formula) -> Result<String, FormulaError> {
    write_script(f, &[], &[])
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    Quoted(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<Sexp>, FormulaError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => stack.push(Vec::new()),
            ')' => {
                let list = stack.pop().unwrap();
                stack
                    .last_mut()
                    .ok_or_else(|| FormulaError::Parse("unbalanced ')'".into()))?
                    .push(Sexp::List(list));
            }
            '|' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(c) => name.push(c),
                        None => return Err(FormulaError::Parse("unterminated quoted symbol".into())),
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Quoted(name));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut atom = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || matches!(n, '(' | ')' | '|' | ';') {
                        break;
                    }
                    atom.push(n);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(atom));
            }
        }
        if stack.is_empty() {
            return Err(FormulaError::Parse("unbalanced ')'".into()));
        }
    }
    if stack.len() != 1 {
        return Err(FormulaError::Parse("unbalanced '('".into()));
    }
    Ok(stack.pop().unwrap())
}

fn parse_int(s: &Sexp) -> Option<BigInt> {
    match s {
        Sexp::Atom(a) if a.chars().all(|c| c.is_ascii_digit()) => a.parse().ok(),
        Sexp::List(l) if l.len() == 2 && l[0] == Sexp::Atom("-".into()) => parse_int(&l[1]).map(|n| -n),
        _ => None,
    }
}

fn parse_constant(s: &Sexp) -> Option<Rational> {
    if let Some(n) = parse_int(s) {
        return Some(Rational::from_integer(n));
    }
    match s {
        Sexp::List(l) if l.len() == 3 && l[0] == Sexp::Atom("/".into()) => {
            let (p, q) = (parse_int(&l[1])?, parse_int(&l[2])?);
            (!q.is_zero()).then(|| Rational::new(p, q))
        }
        _ => None,
    }
}

fn parse_monomial(s: &Sexp) -> Result<Monomial, FormulaError> {
    let factors: Vec<&Sexp> = match s {
        Sexp::List(l) if l.first() == Some(&Sexp::Atom("*".into())) => l[1..].iter().collect(),
        other => vec![other],
    };
    let mut coeff = Rational::one();
    let mut powers = BTreeMap::new();
    for f in factors {
        if let Sexp::Quoted(name) = f {
            *powers.entry(Var(name.clone())).or_insert(0) += 1;
        } else if let Some(q) = parse_constant(f) {
            coeff *= q;
        } else {
            return Err(FormulaError::Parse(format!("unexpected factor {f:?}")));
        }
    }
    Ok(Monomial { powers, coeff: Coeff::Rational(coeff) })
}

fn parse_polynomial(s: &Sexp) -> Result<Polynomial, FormulaError> {
    let terms = match s {
        Sexp::List(l) if l.first() == Some(&Sexp::Atom("+".into())) => {
            l[1..].iter().map(parse_monomial).collect::<Result<Vec<_>, _>>()?
        }
        other => vec![parse_monomial(other)?],
    };
    Ok(Polynomial::from_terms(terms))
}

fn parse_formula(s: &Sexp) -> Result<Formula, FormulaError> {
    let bad = || FormulaError::Parse(format!("unexpected formula {s:?}"));
    match s {
        Sexp::Atom(a) if a == "true" => Ok(Formula::And(Vec::new())),
        Sexp::Atom(a) if a == "false" => Ok(Formula::Or(Vec::new())),
        Sexp::List(l) => {
            let Some(Sexp::Atom(head)) = l.first() else { return Err(bad()) };
            match (head.as_str(), l.len()) {
                ("<" | "=", 3) => {
                    if parse_constant(&l[2]).is_none_or(|c| !c.is_zero()) {
                        return Err(bad());
                    }
                    let p = parse_polynomial(&l[1])?;
                    Ok(if head == "<" { Formula::Lt(p) } else { Formula::Eq(p) })
                }
                ("not", 2) => Ok(Formula::Not(Box::new(parse_formula(&l[1])?))),
                ("and", _) => Ok(Formula::And(l[1..].iter().map(parse_formula).collect::<Result<_, _>>()?)),
                ("or", _) => Ok(Formula::Or(l[1..].iter().map(parse_formula).collect::<Result<_, _>>()?)),
                ("exists" | "forall", 3) => {
                    let Sexp::List(decls) = &l[1] else { return Err(bad()) };
                    let vars = decls
                        .iter()
                        .map(|d| match d {
                            Sexp::List(pair) if pair.len() == 2 && pair[1] == Sexp::Atom("Real".into()) => {
                                match &pair[0] {
                                    Sexp::Quoted(n) | Sexp::Atom(n) => Ok(Var(n.clone())),
                                    _ => Err(bad()),
                                }
                            }
                            _ => Err(bad()),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let body = parse_formula(&l[2])?;
                    Ok(if head == "exists" { Formula::exists(vars, body) } else { Formula::forall(vars, body) })
                }
                _ => Err(bad()),
            }
        }
        _ => Err(bad()),
    }
}

/// Parses a script produced by [`export`], returning the asserted sentence.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let mut asserted = Vec::new();
    for cmd in tokenize(text)? {
        let Sexp::List(l) = &cmd else {
            return Err(FormulaError::Parse(format!("unexpected top-level token {cmd:?}")));
        };
        match l.first() {
            Some(Sexp::Atom(h)) if h == "assert" && l.len() == 2 => asserted.push(parse_formula(&l[1])?),
            Some(Sexp::Atom(h)) if matches!(h.as_str(), "set-logic" | "check-sat" | "set-info" | "exit") => {}
            _ => return Err(FormulaError::Parse(format!("unsupported command {cmd:?}"))),
        }
    }
    match asserted.len() {
        1 => Ok(asserted.pop().unwrap()),
        n => Err(FormulaError::Parse(format!("expected one assertion, found {n}"))),
    }
}
