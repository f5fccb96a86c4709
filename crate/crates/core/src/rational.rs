//! Exact rational arithmetic helpers.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use std::fmt;

pub type Rational = Ratio<i128>;

pub fn rat(p: i128, q: i128) -> Rational {
    Ratio::new(p, q)
}

pub fn int(p: i128) -> Rational {
    Ratio::from_integer(p)
}

/// Always "p/q", even for integers, so JSON output has a single shape.
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Accepts "p/q", plain integers and finite decimals such as "0.125".
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational".into());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let q: i128 = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if q == 0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Ratio::new(p, q));
    }
    if let Some((ip, fp)) = s.split_once('.') {
        let neg = ip.starts_with('-');
        let ip_abs = ip.trim_start_matches(['-', '+']);
        if fp.len() > 30 || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad decimal {s:?}"));
        }
        let whole: i128 = if ip_abs.is_empty() {
            0
        } else {
            ip_abs.parse().map_err(|_| format!("bad decimal {s:?}"))?
        };
        let den = 10i128.pow(fp.len() as u32);
        let frac: i128 = if fp.is_empty() { 0 } else { fp.parse().map_err(|_| format!("bad decimal {s:?}"))? };
        let v = Ratio::new(whole * den + frac, den);
        return Ok(if neg { -v } else { v });
    }
    s.parse::<i128>()
        .map(Ratio::from_integer)
        .map_err(|_| format!("bad rational {s:?}"))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Natural log clamped below at 1.
pub fn clamped_ln(x: f64) -> f64 {
    if x > 0.0 { x.ln().max(1.0) } else { 1.0 }
}

pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 { 0 } else { 64 - (x - 1).leading_zeros() }
}

/// Smallest power of two that is at least `x` (and at least 1).
pub fn pow2_at_least(x: &Rational) -> u64 {
    let mut p = 1u64;
    while int(p as i128) < *x {
        p *= 2;
    }
    p
}

pub fn floor_u64(r: &Rational) -> u64 {
    if r.is_negative() { 0 } else { r.floor().to_integer() as u64 }
}

pub fn ceil_u64(r: &Rational) -> u64 {
    if r.is_negative() { 0 } else { r.ceil().to_integer() as u64 }
}

/// Rational upper approximation of a nonnegative float; used only to fold
/// float-valued constants (logarithms) into exact comparisons.
pub fn from_f64_up(x: f64) -> Rational {
    let den: i128 = 1 << 40;
    let num = (x * den as f64).ceil() as i128;
    Ratio::new(num, den)
}

pub fn from_f64_down(x: f64) -> Rational {
    let den: i128 = 1 << 40;
    let num = (x * den as f64).floor() as i128;
    Ratio::new(num, den)
}

/// A sparsity value that may be infinite (empty denominator).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sparsity {
    Finite(Rational),
    Infinite,
}

impl Sparsity {
    pub fn ratio(num: u64, den: u64) -> Sparsity {
        if den == 0 {
            Sparsity::Infinite
        } else {
            Sparsity::Finite(Ratio::new(num as i128, den as i128))
        }
    }

    pub fn finite(&self) -> Option<Rational> {
        match self {
            Sparsity::Finite(r) => Some(*r),
            Sparsity::Infinite => None,
        }
    }

    pub fn le(&self, bound: &Rational) -> bool {
        matches!(self, Sparsity::Finite(r) if r <= bound)
    }

    pub fn lt(&self, bound: &Rational) -> bool {
        matches!(self, Sparsity::Finite(r) if r < bound)
    }
}

impl fmt::Display for Sparsity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sparsity::Finite(r) => write!(f, "{}", fmt_rational(r)),
            Sparsity::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Sparsity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn is_positive(r: &Rational) -> bool {
    r > &Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub mod serde_rational {
    use super::{fmt_rational, Rational};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub mod option {
        use super::super::{fmt_rational, Rational};
        use serde::Serializer;

        pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_str(&fmt_rational(r)),
                None => s.serialize_none(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse_rational("1/25").unwrap(), rat(1, 25));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-2/4").unwrap(), rat(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn formatting_is_always_a_fraction() {
        assert_eq!(fmt_rational(&int(2)), "2/1");
        assert_eq!(fmt_rational(&rat(6, 4)), "3/2");
    }

    #[test]
    fn infinite_sorts_last() {
        assert!(Sparsity::Finite(int(1000)) < Sparsity::Infinite);
        assert!(Sparsity::ratio(1, 2) < Sparsity::ratio(1, 1));
        assert_eq!(Sparsity::ratio(3, 0), Sparsity::Infinite);
    }

    #[test]
    fn helpers() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(9), 4);
        assert_eq!(pow2_at_least(&rat(5, 2)), 4);
        assert_eq!(pow2_at_least(&rat(1, 3)), 1);
        assert_eq!(clamped_ln(1.0), 1.0);
        assert!(from_f64_up(0.3) >= from_f64_down(0.3));
    }
}
