//! Value approximation by binary search over a `v(s) > α` oracle.
//!
//! The numeric oracle estimates the limit-average value as the limit of
//! discounted values along a decreasing schedule of discount factors. It is
//! a heuristic: verdicts within `discount_tol + margin` of the threshold are
//! flagged uncertain, and the result then carries a widened enclosure next to
//! the dyadic search interval.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::discounted;
use crate::error::ApproxError;
use crate::formula::{self, smtlib, Var};
use crate::game::{self, NormalizationRecord, StochasticGame};
use crate::ratio::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Numeric,
    /// Writes sentences for an external decision procedure; gives no verdicts.
    ExportOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleConfig {
    pub backend: Backend,
    /// Strictly decreasing discount factors in (0, 1).
    pub beta_schedule: Vec<Rational>,
    pub discount_tol: Rational,
    pub stabilization_window: usize,
    pub margin: Rational,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            backend: Backend::Numeric,
            beta_schedule: geometric_schedule(20),
            discount_tol: Rational::new(1.into(), 1_000_000.into()),
            stabilization_window: 3,
            margin: Rational::zero(),
        }
    }
}

/// `2^-1, 2^-2, …, 2^-k`.
pub fn geometric_schedule(k: u32) -> Vec<Rational> {
    (1..=k)
        .map(|i| Rational::new(BigInt::one(), ratio::pow2(i)))
        .collect()
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), ApproxError> {
        if self.beta_schedule.is_empty() {
            return Err(ApproxError::EmptySchedule);
        }
        for b in &self.beta_schedule {
            if !b.is_positive() || *b >= Rational::one() {
                return Err(ApproxError::InvalidConfig(format!(
                    "discount factor {} outside (0, 1)",
                    ratio::format_rational(b)
                )));
            }
        }
        if self.beta_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ApproxError::InvalidConfig("beta schedule must be strictly decreasing".into()));
        }
        if !self.discount_tol.is_positive() {
            return Err(ApproxError::InvalidConfig("discount tolerance must be positive".into()));
        }
        if self.margin.is_negative() {
            return Err(ApproxError::InvalidConfig("margin must be nonnegative".into()));
        }
        if self.stabilization_window == 0 {
            return Err(ApproxError::InvalidConfig("stabilization window must be at least 1".into()));
        }
        Ok(())
    }
}

/// A vanishing-discount estimate and how it was reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Estimate {
    #[serde(with = "ratio::serde_str")]
    pub value: Rational,
    /// `(β, v_β(s))` for every schedule point solved, in schedule order.
    #[serde(serialize_with = "serialize_table")]
    pub table: Vec<(Rational, Rational)>,
    /// The last `stabilization_window` values agreed within `discount_tol`.
    pub stabilized: bool,
    /// The values along the tail of the table were not monotone.
    pub non_monotone_tail: bool,
}

fn serialize_table<S: serde::Serializer>(t: &[(Rational, Rational)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(t.len()))?;
    for (b, v) in t {
        seq.serialize_element(&[ratio::format_rational(b), ratio::format_rational(v)])?;
    }
    seq.end()
}

fn check_state(g: &StochasticGame, s: usize) -> Result<(), ApproxError> {
    if s < g.num_states() {
        Ok(())
    } else {
        Err(ApproxError::UnknownState(s + 1))
    }
}

/// Solves the discounted game along the schedule until the last
/// `stabilization_window` values agree within `discount_tol`.
pub fn vanishing_discount_estimate(g: &StochasticGame, s: usize, cfg: &OracleConfig) -> Result<Estimate, ApproxError> {
    cfg.validate()?;
    check_state(g, s)?;
    if !g.is_normalized() {
        return Err(ApproxError::NotNormalized);
    }
    // Each solve is accurate to a quarter of the tolerance, so stabilization
    // reflects the schedule rather than solver error.
    let solve_tol = &cfg.discount_tol / Rational::from_integer(4.into());
    let mut table: Vec<(Rational, Rational)> = Vec::new();
    let mut stabilized = false;
    for beta in &cfg.beta_schedule {
        let sol = discounted::discounted_value(g, beta, &solve_tol)?;
        table.push((beta.clone(), sol.valuation[s].clone()));
        if table.len() >= cfg.stabilization_window {
            let tail = &table[table.len() - cfg.stabilization_window..];
            let hi = tail.iter().map(|(_, v)| v).max().unwrap();
            let lo = tail.iter().map(|(_, v)| v).min().unwrap();
            if hi - lo <= cfg.discount_tol {
                stabilized = true;
                break;
            }
        }
    }
    let window = cfg.stabilization_window.max(2).min(table.len());
    let tail: Vec<&Rational> = table[table.len() - window..].iter().map(|(_, v)| v).collect();
    let up = tail.windows(2).all(|w| w[0] <= w[1]);
    let down = tail.windows(2).all(|w| w[0] >= w[1]);
    Ok(Estimate {
        value: table.last().unwrap().1.clone(),
        non_monotone_tail: !(up || down),
        stabilized,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    /// Whether the value is judged to exceed the threshold.
    pub holds: bool,
    /// False when the estimate is too close to the threshold to trust.
    pub certain: bool,
}

impl Verdict {
    pub fn exact(holds: bool) -> Self {
        Verdict { holds, certain: true }
    }
}

/// Answers `v(s) > m` queries for the binary search.
pub trait ThresholdOracle {
    fn query(&mut self, m: &Rational) -> Result<Verdict, ApproxError>;

    /// How far an uncertain verdict may be off.
    fn slack(&self) -> Rational {
        Rational::zero()
    }
}

/// Compares thresholds against a fixed estimate.
#[derive(Debug, Clone)]
pub struct EstimateOracle {
    pub estimate: Rational,
    pub slack: Rational,
}

impl EstimateOracle {
    pub fn new(estimate: Rational, cfg: &OracleConfig) -> Self {
        EstimateOracle { estimate, slack: &cfg.discount_tol + &cfg.margin }
    }
}

impl ThresholdOracle for EstimateOracle {
    fn query(&mut self, m: &Rational) -> Result<Verdict, ApproxError> {
        Ok(Verdict {
            holds: self.estimate > *m,
            certain: (&self.estimate - m).abs() > self.slack,
        })
    }

    fn slack(&self) -> Rational {
        self.slack.clone()
    }
}

/// Decides `v(s) > α` with the numeric backend.
pub fn decide_threshold(
    g: &StochasticGame,
    s: usize,
    alpha: &Rational,
    cfg: &OracleConfig,
) -> Result<(Verdict, Estimate), ApproxError> {
    if cfg.backend == Backend::ExportOnly {
        return Err(ApproxError::ExportBackend);
    }
    let est = vanishing_discount_estimate(g, s, cfg)?;
    let verdict = EstimateOracle::new(est.value.clone(), cfg).query(alpha)?;
    Ok((verdict, est))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    #[serde(with = "ratio::serde_str")]
    pub midpoint: Rational,
    pub verdict: bool,
    pub certain: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntervalResult {
    /// Dyadic search interval: both ends are multiples of `1/dyadic_denominator`.
    #[serde(with = "ratio::serde_str")]
    pub lower: Rational,
    #[serde(with = "ratio::serde_str")]
    pub upper: Rational,
    pub iterations: u32,
    pub transcript: Vec<Query>,
    #[serde(serialize_with = "serialize_bigint")]
    pub dyadic_denominator: BigInt,
    /// Some verdict was uncertain.
    pub heuristic: bool,
    /// `[lower, upper]` widened by the oracle slack on each side that an
    /// uncertain verdict moved, clipped to `[0, 1]`. Equal to the search
    /// interval when every verdict was certain.
    #[serde(serialize_with = "serialize_pair")]
    pub enclosure: (Rational, Rational),
    pub estimate: Option<Estimate>,
}

fn serialize_bigint<S: serde::Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

fn serialize_pair<S: serde::Serializer>(p: &(Rational, Rational), s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(2))?;
    seq.serialize_element(&ratio::format_rational(&p.0))?;
    seq.serialize_element(&ratio::format_rational(&p.1))?;
    seq.end()
}

/// The halving loop: `⌈log₂(1/ε)⌉` queries starting from `[0, 1]`.
pub fn binary_search(oracle: &mut impl ThresholdOracle, epsilon: &Rational) -> Result<IntervalResult, ApproxError> {
    if !epsilon.is_positive() {
        return Err(ApproxError::InvalidEpsilon("0 < epsilon", ratio::format_rational(epsilon)));
    }
    let iterations = ratio::ceil_log2_recip(epsilon);
    let two = Rational::from_integer(2.into());
    let mut l = Rational::zero();
    let mut u = Rational::one();
    let mut transcript = Vec::with_capacity(iterations as usize);
    let (mut widen_low, mut widen_high) = (false, false);
    for _ in 0..iterations {
        let m = (&l + &u) / &two;
        let v = oracle.query(&m)?;
        if v.holds {
            widen_low |= !v.certain;
            l = m.clone();
        } else {
            widen_high |= !v.certain;
            u = m.clone();
        }
        transcript.push(Query { midpoint: m, verdict: v.holds, certain: v.certain });
    }
    let slack = oracle.slack();
    let lo = if widen_low { (&l - &slack).max(Rational::zero()) } else { l.clone() };
    let hi = if widen_high { (&u + &slack).min(Rational::one()) } else { u.clone() };
    Ok(IntervalResult {
        lower: l,
        upper: u,
        iterations,
        transcript,
        dyadic_denominator: ratio::pow2(iterations),
        heuristic: widen_low || widen_high,
        enclosure: (lo, hi),
        estimate: None,
    })
}

/// Approximates `v(s)` of a game with rewards in `[0, 1]` to an interval of
/// width at most `2ε`.
pub fn approximate_value(
    g: &StochasticGame,
    s: usize,
    epsilon: &Rational,
    cfg: &OracleConfig,
) -> Result<IntervalResult, ApproxError> {
    if !epsilon.is_positive() || *epsilon >= Rational::one() {
        return Err(ApproxError::InvalidEpsilon("0 < epsilon < 1", ratio::format_rational(epsilon)));
    }
    search(g, s, epsilon, cfg)
}

fn search(g: &StochasticGame, s: usize, epsilon: &Rational, cfg: &OracleConfig) -> Result<IntervalResult, ApproxError> {
    if cfg.backend == Backend::ExportOnly {
        return Err(ApproxError::ExportBackend);
    }
    // Every query compares against the same estimate, so it is computed once.
    let est = vanishing_discount_estimate(g, s, cfg)?;
    let mut oracle = EstimateOracle::new(est.value.clone(), cfg);
    let mut result = binary_search(&mut oracle, epsilon)?;
    result.estimate = Some(est);
    Ok(result)
}

/// An interval for an arbitrary rational game, mapped back from the
/// normalized game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValueInterval {
    #[serde(with = "ratio::serde_str")]
    pub lower: Rational,
    #[serde(with = "ratio::serde_str")]
    pub upper: Rational,
    #[serde(serialize_with = "serialize_pair")]
    pub enclosure: (Rational, Rational),
    #[serde(with = "ratio::serde_str")]
    pub m_scale: Rational,
    /// The search on the normalized game; absent when all rewards are 0.
    pub normalized: Option<IntervalResult>,
}

/// Normalizes, searches with tolerance `ε/(2M)` and maps the interval back.
pub fn approximate_value_unnormalized(
    g: &StochasticGame,
    s: usize,
    epsilon: &Rational,
    cfg: &OracleConfig,
) -> Result<ValueInterval, ApproxError> {
    if !epsilon.is_positive() {
        return Err(ApproxError::InvalidEpsilon("0 < epsilon", ratio::format_rational(epsilon)));
    }
    cfg.validate()?;
    check_state(g, s)?;
    let (normalized, rec) = game::normalize(g);
    if rec.degenerate {
        return Ok(ValueInterval {
            lower: Rational::zero(),
            upper: Rational::zero(),
            enclosure: (Rational::zero(), Rational::zero()),
            m_scale: Rational::zero(),
            normalized: None,
        });
    }
    let inner_eps = epsilon / (Rational::from_integer(2.into()) * &rec.m_scale);
    let result = search(&normalized, s, &inner_eps, cfg)?;
    let (lower, upper) = game::denormalize_interval(&rec, &result.lower, &result.upper)?;
    let enclosure = game::denormalize_interval(&rec, &result.enclosure.0, &result.enclosure.1)?;
    Ok(ValueInterval { lower, upper, enclosure, m_scale: rec.m_scale.clone(), normalized: Some(result) })
}

/// The export backend's query: an SMT-LIB script asserting Φ(s, α) for the
/// normalized game with `alpha` pinned to the first midpoint `1/2`. Repeating
/// it with `alpha` set to each next midpoint runs the search externally.
pub fn export_query(g: &StochasticGame, s: usize, epsilon: &Rational) -> Result<String, ApproxError> {
    if !epsilon.is_positive() {
        return Err(ApproxError::InvalidEpsilon("0 < epsilon", ratio::format_rational(epsilon)));
    }
    check_state(g, s)?;
    let (normalized, rec) = game::normalize(g);
    let sentence = formula::build_value_sentence_parametric(&normalized, s)?;
    let m = if rec.degenerate { Rational::one() } else { rec.m_scale.clone() };
    let inner_eps = epsilon / (Rational::from_integer(2.into()) * &m);
    let steps = ratio::ceil_log2_recip(&inner_eps);
    let comments = vec![
        format!("value of state {} exceeds alpha (rewards rescaled to [0, 1])", s + 1),
        "sat: the value exceeds alpha; unsat: it does not".to_string(),
        format!(
            "binary search: start with l = 0, u = 1, alpha = 1/2; on sat set l = alpha, else u = alpha; \
             repeat {steps} times with alpha = (l + u)/2"
        ),
        format!("map an interval [l, u] back by x -> {}·(2x - 1)", ratio::format_rational(&m)),
    ];
    let half = Rational::new(1.into(), 2.into());
    Ok(smtlib::write_script(&sentence, &[(Var::alpha(), half)], &comments)?)
}

/// Maps a normalized interval back; convenience for callers holding a record.
pub fn denormalize(rec: &NormalizationRecord, r: &IntervalResult) -> Result<(Rational, Rational), ApproxError> {
    Ok(game::denormalize_interval(rec, &r.lower, &r.upper)?)
}
