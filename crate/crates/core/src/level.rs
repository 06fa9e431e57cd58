//! Exact rational levels.
//!
//! Every support-line objective lives on the grid `l/(n+1)` shifted by a
//! multiple of a rational slope, so all comparisons are made on integers
//! after clearing denominators. `Rational` is the shared exact type.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rational = num_rational::Ratio<i128>;

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Positive part of a rational.
pub fn positive_part(r: Rational) -> Rational {
    if r.is_negative() {
        Rational::zero()
    } else {
        r
    }
}

/// Parses `"0.25"`, `"1/4"`, `"1e-2"` or `"3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::InvalidLevel(format!("cannot parse `{text}` as an exact number"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: i128 = num.trim().parse().map_err(|_| bad())?;
        let den: i128 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let joined = format!("{int_part}{frac_part}");
    let mut num: i128 = joined.trim_start_matches('0').parse().unwrap_or(0);
    if joined.trim_start_matches('0').len() > 30 {
        return Err(bad());
    }
    let scale = exponent - frac_part.len() as i32;
    if scale.unsigned_abs() > 30 {
        return Err(bad());
    }
    let pow = 10i128.pow(scale.unsigned_abs());
    let mut den = 1i128;
    if scale >= 0 {
        num = num.checked_mul(pow).ok_or_else(bad)?;
    } else {
        den = pow;
    }
    if negative {
        num = -num;
    }
    Ok(Rational::new(num, den))
}

/// Target level α, an exact rational in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Level(Rational);

impl Level {
    pub fn new(numer: i128, denom: i128) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidLevel("zero denominator".into()));
        }
        Self::from_rational(Rational::new(numer, denom))
    }

    pub fn from_rational(value: Rational) -> Result<Self> {
        if value <= Rational::zero() || value >= Rational::one() {
            return Err(Error::InvalidLevel(format!(
                "alpha must lie in (0, 1), got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> Rational {
        self.0
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn as_f64(&self) -> f64 {
        to_f64(&self.0)
    }

    /// α/2, used by the halved multi-subsample variants.
    pub fn halved(&self) -> Self {
        Self(self.0 / Rational::from_integer(2))
    }

    /// `⌊α·x⌋` for a nonnegative integer `x`.
    pub fn floor_times(&self, x: u64) -> u64 {
        let (q, _) = (self.numer() * x as i128).div_rem(&self.denom());
        q as u64
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_rational(parse_rational(s)?)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_decimal(&self.0))
    }
}

/// Writes a rational as a terminating decimal when possible, `p/q` otherwise.
pub fn format_decimal(r: &Rational) -> String {
    let mut den = *r.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scaled = r * Rational::from_integer(10i128.pow(digits));
    let value = scaled.to_integer();
    if digits == 0 {
        return value.to_string();
    }
    let sign = if value < 0 { "-" } else { "" };
    let abs = value.unsigned_abs();
    let pow = 10u128.pow(digits);
    format!(
        "{sign}{}.{:0width$}",
        abs / pow,
        abs % pow,
        width = digits as usize
    )
}

impl Serialize for Level {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Level {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        // Accepts JSON strings and numbers; numbers go through their shortest
        // round-trip decimal form so `0.05` means exactly 1/20.
        let value = serde_json::Value::deserialize(deserializer)?;
        let text = match value {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "expected a level, got {other}"
                )))
            }
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("0.25").unwrap(), Rational::new(1, 4));
        assert_eq!(parse_rational("0.1").unwrap(), Rational::new(1, 10));
        assert_eq!(parse_rational("1/3").unwrap(), Rational::new(1, 3));
        assert_eq!(parse_rational("5e-2").unwrap(), Rational::new(1, 20));
        assert_eq!(parse_rational(".5").unwrap(), Rational::new(1, 2));
        assert_eq!(parse_rational("-1.5").unwrap(), Rational::new(-3, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn level_bounds() {
        assert!("0".parse::<Level>().is_err());
        assert!("1".parse::<Level>().is_err());
        assert!("1.2".parse::<Level>().is_err());
        assert!("-0.1".parse::<Level>().is_err());
        let a: Level = "0.6".parse().unwrap();
        assert_eq!(a.value(), Rational::new(3, 5));
        assert_eq!(a.halved().value(), Rational::new(3, 10));
        assert_eq!(a.floor_times(11), 6);
    }

    #[test]
    fn decimal_display_round_trips() {
        for s in ["0.05", "0.25", "0.5", "0.125", "1/3"] {
            let a: Level = s.parse().unwrap();
            assert_eq!(a.to_string(), s);
        }
        let json: Level = serde_json::from_str("0.05").unwrap();
        assert_eq!(json.value(), Rational::new(1, 20));
    }
}
