//! Exact arithmetic helpers.

use alloc::string::String;
use core::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for every value, price and welfare figure.
pub type Rational = BigRational;

/// `numer / denom` as a [`Rational`]. Panics if `denom` is zero.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn from_usize(value: usize) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Nearest `f64`; saturates to infinity for out-of-range magnitudes.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Rational bounds `lo < e < hi` from the first `terms` terms of the series
/// `sum 1/k!`. The tail after term `n` is below `1 / (n! * n)`.
pub fn e_bounds(terms: u32) -> (Rational, Rational) {
    let terms = terms.max(2);
    let mut lo = Rational::zero();
    let mut fact = BigInt::one();
    for k in 0..terms {
        if k > 0 {
            fact *= BigInt::from(k);
        }
        lo += Rational::new(BigInt::one(), fact.clone());
    }
    // last added term is 1/(terms-1)!; remaining tail < 1/((terms-1)! (terms-1))
    let n = BigInt::from(terms - 1);
    let hi = &lo + Rational::new(BigInt::one(), fact * n);
    (lo, hi)
}

/// Decides `e * lhs >= rhs` exactly for `lhs >= 0`.
pub fn e_times_at_least(lhs: &Rational, rhs: &Rational) -> bool {
    if lhs.is_zero() {
        return !rhs.is_positive();
    }
    let mut terms = 20;
    loop {
        let (lo, hi) = e_bounds(terms);
        if &(&lo * lhs) >= rhs {
            return true;
        }
        if &(&hi * lhs) < rhs {
            return false;
        }
        // e is irrational so equality never happens; tighter bounds settle it
        terms *= 2;
    }
}

/// Parses `"3"`, `"-0.125"`, `"1e-6"`, `"2.5E3"` or `"7/20"` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .bytes()
        .chain(frac.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let mut digits = String::with_capacity(whole.len() + frac.len());
    digits.push_str(whole);
    digits.push_str(frac);
    let numer = BigInt::from_str(&digits).ok()?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn e_bounds_bracket_e() {
        let (lo, hi) = e_bounds(15);
        assert!(to_f64(&lo) < core::f64::consts::E);
        assert!(to_f64(&hi) > core::f64::consts::E);
        assert!(to_f64(&(hi - lo)) < 1e-10);
    }

    #[test]
    fn e_comparison() {
        assert!(e_times_at_least(&int(1), &ratio(2718, 1000)));
        assert!(!e_times_at_least(&int(1), &ratio(2719, 1000)));
        assert!(e_times_at_least(&int(0), &int(0)));
        assert!(!e_times_at_least(&int(0), &ratio(1, 10)));
    }

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_rational("0.125"), Some(ratio(1, 8)));
        assert_eq!(parse_rational("-3"), Some(int(-3)));
        assert_eq!(parse_rational("1e-3"), Some(ratio(1, 1000)));
        assert_eq!(parse_rational("2.5E2"), Some(int(250)));
        assert_eq!(parse_rational("7/20"), Some(ratio(7, 20)));
        assert_eq!(parse_rational(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
        assert_eq!(parse_rational("."), None);
    }
}
