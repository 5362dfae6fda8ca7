//! Helpers around [`BigRational`]: parsing, formatting, bit sizes and
//! float conversion.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::ParseRationalError;

pub type Rational = BigRational;

/// Parses `"num/den"` or an integer string such as `"-3"`.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let trimmed = text.trim();
    let bad = || ParseRationalError(text.to_string());
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| bad())?;
    let den = BigInt::from_str(den).map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Formats a rational as `"num/den"`, or just `"num"` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Number of binary digits of `|n|`; zero takes one digit.
pub fn digit_bits(n: &BigInt) -> u64 {
    n.bits().max(1)
}

/// Space to write a rational in binary: a sign bit plus the digits of the
/// numerator and the denominator.
pub fn rational_bits(q: &Rational) -> u64 {
    1 + digit_bits(q.numer()) + digit_bits(q.denom())
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_f64(x).expect("finite float")
}

pub fn abs_max<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values
        .into_iter()
        .map(|q| q.abs())
        .fold(Rational::zero(), |acc, q| if q > acc { q } else { acc })
}

/// Smallest `i >= 0` with `2^i * eps >= 1`, i.e. `ceil(log2(1/eps))` for
/// `0 < eps`.
pub fn ceil_log2_recip(eps: &Rational) -> u32 {
    let mut i = 0u32;
    let mut scaled = eps.clone();
    while scaled < Rational::one() {
        scaled *= int(2);
        i += 1;
    }
    i
}

pub fn pow2(i: u32) -> BigInt {
    BigInt::one() << i
}

/// True when `q * 2^i` is an integer in `[0, 2^i]`.
pub fn is_dyadic_unit(q: &Rational, i: u32) -> bool {
    let scaled = q * Rational::from_integer(pow2(i));
    scaled.is_integer() && !scaled.is_negative() && scaled.numer() <= &pow2(i)
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

/// Serde adapter for rationals written as `"num/den"` strings.
pub mod serde_str {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}
