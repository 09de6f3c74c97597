//! Exact rational numbers and the extended non-negative line `[0, ∞]`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational used for every probability and coefficient.
pub type Rat = BigRational;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRatError(pub String);

/// Builds `num / den`. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"3"`, `"-1/2"`, `"0.125"` or `"1.5e-3"` exactly.
///
/// Decimal literals are converted digit by digit, never through a float, so
/// solver output such as `0.3333` becomes exactly `3333/10000`.
pub fn parse_rat(text: &str) -> Result<Rat, ParseRatError> {
    let s = text.trim();
    let err = || ParseRatError(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rat(n)?;
        let d = parse_rat(d)?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let joined = format!("{whole}{frac}");
    let numer = BigInt::from_str(if joined.is_empty() { "0" } else { &joined }).map_err(|_| err())?;
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rat::from_integer(numer);
    if scale >= 0 {
        value *= Rat::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rat::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// Canonical `"num/den"` rendering used by every JSON writer.
pub fn format_rat(value: &Rat) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Compact rendering: integers without a denominator.
pub fn display_rat(value: &Rat) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    value.to_f64().unwrap_or(f64::NAN)
}

/// A value of `[0, ∞]` (or of the whole extended line when negative
/// rationals are allowed by the caller).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ext {
    Fin(Rat),
    Inf,
}

impl Ext {
    pub fn zero() -> Self {
        Ext::Fin(Rat::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn finite(&self) -> Option<&Rat> {
        match self {
            Ext::Fin(r) => Some(r),
            Ext::Inf => None,
        }
    }

    /// `x + 1`, with `∞ + 1 = ∞`.
    pub fn succ(&self) -> Ext {
        match self {
            Ext::Fin(r) => Ext::Fin(r + Rat::one()),
            Ext::Inf => Ext::Inf,
        }
    }

    /// `self ≥ other`, treating `∞` as the maximum (so `∞ ≥ ∞`).
    pub fn ge(&self, other: &Ext) -> bool {
        self.cmp(other) != Ordering::Less
    }

    /// `self ≥ 1 + other`. Defined as false whenever `other` is infinite,
    /// including `∞ ≥ 1 + ∞`.
    pub fn ge_succ(&self, other: &Ext) -> bool {
        match (self, other) {
            (_, Ext::Inf) => false,
            (Ext::Inf, Ext::Fin(_)) => true,
            (Ext::Fin(a), Ext::Fin(b)) => *a >= b + Rat::one(),
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, Ext::Fin(r) if r.is_negative())
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ext::Inf, Ext::Inf) => Ordering::Equal,
            (Ext::Inf, _) => Ordering::Greater,
            (_, Ext::Inf) => Ordering::Less,
            (Ext::Fin(a), Ext::Fin(b)) => a.cmp(b),
        }
    }
}

impl From<Rat> for Ext {
    fn from(value: Rat) -> Self {
        Ext::Fin(value)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(r) => f.write_str(&display_rat(r)),
            Ext::Inf => f.write_str("inf"),
        }
    }
}

impl FromStr for Ext {
    type Err = ParseRatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "∞" | "+inf" => Ok(Ext::Inf),
            other => parse_rat(other).map(Ext::Fin),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rat("-1/2").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rat("1.5e-3").unwrap(), rat(3, 2000));
        assert_eq!(parse_rat("2e2").unwrap(), int(200));
        assert_eq!(parse_rat(".5").unwrap(), rat(1, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert!(parse_rat("").is_err());
    }

    #[test]
    fn infinity_never_strictly_dominates_itself() {
        assert!(Ext::Inf.ge(&Ext::Inf));
        assert!(!Ext::Inf.ge_succ(&Ext::Inf));
        assert!(Ext::Inf.ge_succ(&Ext::Fin(int(5))));
        assert!(Ext::Fin(int(1)).ge_succ(&Ext::zero()));
        assert!(!Ext::Fin(rat(1, 2)).ge_succ(&Ext::zero()));
    }

    #[test]
    fn canonical_format_always_has_denominator() {
        assert_eq!(format_rat(&int(3)), "3/1");
        assert_eq!(format_rat(&rat(2, -4)), "-1/2");
    }
}
