//! Exact rational numbers and their text forms.
//!
//! Every time, rate, share and payoff in the crate is a [`Rational`]. Text
//! input accepts `p/q` fractions, integers and finite decimals; decimals are
//! converted with a power-of-ten denominator and never rounded.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ModelError;

/// Arbitrary-precision fraction, always in lowest terms with a positive denominator.
pub type Rational = num_rational::BigRational;

/// Builds `num/den` from machine integers. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"-0.125"`.
pub fn parse_rational(text: &str) -> Result<Rational, ModelError> {
    let s = text.trim();
    let malformed = || ModelError::MalformedRational(text.to_string());
    if s.is_empty() {
        return Err(malformed());
    }

    if let Some((p, q)) = s.split_once('/') {
        let num = parse_integer(p.trim()).ok_or_else(malformed)?;
        let den = parse_integer(q.trim()).ok_or_else(malformed)?;
        if den.is_zero() {
            return Err(ModelError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(num, den));
    }

    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err(malformed());
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    let digits = format!("{whole}{frac}");
    let mut num: BigInt = digits.parse().map_err(|_| malformed())?;
    if negative {
        num = -num;
    }
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Ok(Rational::new(num, den))
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Canonical exact text: `"p/q"`, or `"p"` for integers. Inverse of [`parse_rational`].
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

/// Decimal rendering with `digits` significant digits, rounded half away from zero.
///
/// Display only: the result is approximate and must never be parsed back into
/// a computation.
pub fn to_decimal(value: &Rational, digits: usize) -> String {
    assert!(digits >= 1);
    if value.is_zero() {
        return "0".to_string();
    }
    let sign = if value.is_negative() { "-" } else { "" };
    let abs = value.abs();
    let ten = BigInt::from(10);

    // exponent e with 10^e <= abs < 10^(e+1)
    let mut exp: i64 = abs.numer().to_string().len() as i64 - abs.denom().to_string().len() as i64;
    let pow10 = |e: i64| -> Rational {
        if e >= 0 {
            Rational::from_integer(num_traits::pow(ten.clone(), e as usize))
        } else {
            Rational::new(BigInt::one(), num_traits::pow(ten.clone(), (-e) as usize))
        }
    };
    while abs < pow10(exp) {
        exp -= 1;
    }
    while abs >= pow10(exp + 1) {
        exp += 1;
    }

    let shift = digits as i64 - 1 - exp;
    let scaled = &abs * pow10(shift);
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let mut mantissa = if BigInt::from(2) * r >= *scaled.denom() { q + 1 } else { q };
    if mantissa == num_traits::pow(ten.clone(), digits) {
        mantissa /= &ten;
        exp += 1;
    }
    let m = mantissa.to_string();

    let body = if exp >= digits as i64 - 1 {
        format!("{m}{}", "0".repeat((exp - (digits as i64 - 1)) as usize))
    } else if exp >= 0 {
        let split = exp as usize + 1;
        format!("{}.{}", &m[..split], &m[split..])
    } else {
        format!("0.{}{m}", "0".repeat((-exp - 1) as usize))
    };
    format!("{sign}{body}")
}

/// Six significant digits, the harness's display precision.
pub fn display_decimal(value: &Rational) -> String {
    to_decimal(value, 6)
}

/// Lossy conversion for statistics (standard errors) only.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub mod serde_str {
    //! `#[serde(with = ...)]` helpers that store rationals as exact strings.
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}
