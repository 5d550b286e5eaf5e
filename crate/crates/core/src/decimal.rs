//! Locale-independent fixed-point rendering with round-half-even.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::number::{f64_to_rational, Rational};

/// Renders `value` with exactly `digits` decimals, ties to even.
pub fn format_rational(value: &Rational, digits: usize) -> String {
    let negative = value.is_negative();
    let magnitude = value.abs();
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = magnitude * Rational::from_integer(scale.clone());
    let (floor, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem * 2u32;
    let mut units = floor;
    match twice.cmp(scaled.denom()) {
        std::cmp::Ordering::Greater => units += 1u32,
        std::cmp::Ordering::Equal if units.is_odd() => units += 1u32,
        _ => {}
    }
    let (int_part, frac_part) = units.div_rem(&scale);
    let sign = if negative && !(int_part.is_zero() && frac_part.is_zero()) {
        "-"
    } else {
        ""
    };
    if digits == 0 {
        return format!("{sign}{int_part}");
    }
    format!("{sign}{int_part}.{frac:0>digits$}", frac = frac_part.to_string())
}

/// Renders the exact binary value of `value`; non-finite values render as-is.
pub fn format_f64(value: f64, digits: usize) -> String {
    match f64_to_rational(value) {
        Some(r) => format_rational(&r, digits),
        None => format!("{value}"),
    }
}
