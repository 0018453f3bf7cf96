//! Exact rational scalars and their textual form (`"p/q"` or `"p"`).

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"p/q"`, `"p"` or `"-p/q"`; the result is reduced.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let malformed = || Error::Parse(format!("malformed rational {text:?}"));
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| malformed())?;
    let den = BigInt::from_str(den).map_err(|_| malformed())?;
    if den.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {text:?}")));
    }
    Ok(Rational::new(num, den))
}

/// Lowest-terms string; integers carry no denominator.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // Huge numerators and denominators: scale both down first.
        let n = value.numer().to_f64().unwrap_or(f64::NAN);
        let d = value.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn abs(value: &Rational) -> Rational {
    value.abs()
}

/// `2^e` for any signed exponent.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

pub fn pow(base: &Rational, e: i64) -> Result<Rational> {
    if e < 0 && base.is_zero() {
        return Err(Error::ZeroComponent);
    }
    let mut acc = Rational::one();
    let b = if e < 0 { base.recip() } else { base.clone() };
    for _ in 0..e.unsigned_abs() {
        acc *= &b;
    }
    Ok(acc)
}

pub(crate) mod serde_str {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }
}
