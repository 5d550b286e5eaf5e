//! Real parameters that optionally carry an exact rational value.
//!
//! Decimal literals such as `0.9` or `1e-3` and fractions such as `9/10` parse
//! to exact rationals, so a prior written by hand keeps an exact arithmetic
//! path. Values built from `f64` carry no exact form.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational used on every exact path.
pub type Rational = BigRational;

/// Nearest `f64` to a rational.
pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_rational(x: f64) -> Option<Rational> {
    BigRational::from_float(x)
}

/// Parses `"p/q"`, an integer, or a decimal literal (optional exponent) exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_decimal(num.trim())?;
        let den = parse_decimal(den.trim())?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(num / den);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let bad = || Error::Parse(format!("malformed number {s:?}"));
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => {
            let exp: i64 = body[i + 1..].parse().map_err(|_| bad())?;
            (&body[..i], exp)
        }
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if exponent.unsigned_abs() > 100_000 {
        return Err(Error::Parse(format!("exponent out of range in {s:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().unwrap_or_else(|_| BigInt::zero()));
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= BigRational::from_integer(pow);
    } else {
        value /= BigRational::from_integer(pow);
    }
    Ok(if negative { -value } else { value })
}

/// A real parameter with an optional exact rational value.
#[derive(Debug, Clone, PartialEq)]
pub struct Number {
    value: f64,
    exact: Option<Rational>,
}

impl Number {
    pub fn from_f64(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn from_rational(exact: Rational) -> Self {
        Self {
            value: rational_to_f64(&exact),
            exact: Some(exact),
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn integer(n: i64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into()))
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&Rational> {
        self.exact.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(r) => r.is_zero(),
            None => self.value == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.exact {
            Some(r) => r.is_one(),
            None => self.value == 1.0,
        }
    }

    /// Same number, compared exactly when both sides are exact.
    pub fn same_as(&self, other: &Number) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.value == other.value,
        }
    }

    pub(crate) fn add(&self, other: &Number) -> Number {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Number::from_rational(a + b),
            _ => Number::from_f64(self.value + other.value),
        }
    }

    pub(crate) fn div(&self, other: &Number) -> Number {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Number::from_rational(a / b),
            _ => Number::from_f64(self.value / other.value),
        }
    }
}

impl FromStr for Number {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s).map(Number::from_rational)
    }
}

impl From<f64> for Number {
    fn from(value: f64) -> Self {
        Number::from_f64(value)
    }
}

impl From<i64> for Number {
    fn from(value: i64) -> Self {
        Number::integer(value)
    }
}

impl From<Rational> for Number {
    fn from(value: Rational) -> Self {
        Number::from_rational(value)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{:?}", self.value),
        }
    }
}
