//! Exact voting-power arithmetic.
//!
//! Power values are non-negative integer counts of the smallest power unit.
//! Fractional quantities (coin balances, staking coefficients, resistance
//! factors) are exact rationals; nothing here rounds through floating point.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Voting power, counted in smallest units.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Power(pub u64);

impl Power {
    pub const ZERO: Power = Power(0);

    pub fn units(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Power) -> Result<Power> {
        self.0
            .checked_add(rhs.0)
            .map(Power)
            .ok_or(Error::PowerOverflow)
    }

    pub fn checked_sub(self, rhs: Power) -> Option<Power> {
        self.0.checked_sub(rhs.0).map(Power)
    }

    pub fn saturating_add(self, rhs: Power) -> Power {
        Power(self.0.saturating_add(rhs.0))
    }

    pub fn saturating_sub(self, rhs: Power) -> Power {
        Power(self.0.saturating_sub(rhs.0))
    }
}

impl Add for Power {
    type Output = Power;
    fn add(self, rhs: Power) -> Power {
        Power(self.0 + rhs.0)
    }
}

impl AddAssign for Power {
    fn add_assign(&mut self, rhs: Power) {
        self.0 += rhs.0;
    }
}

impl Sum for Power {
    fn sum<I: Iterator<Item = Power>>(iter: I) -> Power {
        iter.fold(Power::ZERO, |acc, p| acc.saturating_add(p))
    }
}

impl fmt::Display for Power {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `floor(p * num / den)` in exact integer arithmetic. `den` must be positive.
pub fn mul_div_floor(p: Power, num: u64, den: u64) -> Result<Power> {
    debug_assert!(den > 0);
    let v = p.units() as u128 * num as u128 / den as u128;
    power_from_u128(v)
}

/// `ceil(p * num / den)` in exact integer arithmetic. `den` must be positive.
pub fn mul_div_ceil(p: Power, num: u64, den: u64) -> Result<Power> {
    debug_assert!(den > 0);
    let prod = p.units() as u128 * num as u128;
    let v = prod.div_ceil(den as u128);
    power_from_u128(v)
}

pub(crate) fn power_from_u128(v: u128) -> Result<Power> {
    u64::try_from(v).map(Power).map_err(|_| Error::PowerOverflow)
}

/// Splits `total` into `slots` integer parts that differ by at most one:
/// `total mod slots` early slots get the extra unit.
pub fn even_allocation(total: u128, slots: usize) -> Vec<u128> {
    if slots == 0 {
        debug_assert_eq!(total, 0);
        return Vec::new();
    }
    let base = total / slots as u128;
    let rem = (total % slots as u128) as usize;
    (0..slots)
        .map(|i| if i < rem { base + 1 } else { base })
        .collect()
}

/// An exact signed rational. Serialized as a string (`"3"`, `"15/7"`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(Ratio<i128>);

impl Rational {
    pub fn new(numer: i128, denom: i128) -> Result<Self> {
        if denom == 0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(Rational(Ratio::new(numer, denom)))
    }

    pub fn from_integer(n: i128) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn zero() -> Self {
        Self::from_integer(0)
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_negative(&self) -> bool {
        self.0 < Ratio::from_integer(0)
    }

    pub fn is_positive(&self) -> bool {
        self.0 > Ratio::from_integer(0)
    }

    pub fn add(&self, other: &Rational) -> Rational {
        Rational(self.0 + other.0)
    }

    pub fn sub(&self, other: &Rational) -> Rational {
        Rational(self.0 - other.0)
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        Rational(self.0 * other.0)
    }

    pub fn div(&self, other: &Rational) -> Result<Rational> {
        if *other.0.numer() == 0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(Rational(self.0 / other.0))
    }

    /// Floor to whole power units. Errors on negative values or u64 overflow.
    pub fn floor_power(&self) -> Result<Power> {
        if self.is_negative() {
            return Err(Error::NegativeCoins(self.to_string()));
        }
        let floored = self.0.floor().to_integer();
        u64::try_from(floored)
            .map(Power)
            .map_err(|_| Error::PowerOverflow)
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Two-decimal rendering, e.g. `15/7` -> `"2.14"`.
    pub fn two_decimals(&self) -> String {
        format!("{:.2}", self.to_f64())
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts integers (`"3"`), fractions (`"15/7"`), and decimal strings
    /// (`"100.5"`, `"-0.25"`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidNumber(s.to_string()));
        }
        if let Some((n, d)) = s.split_once('/') {
            let numer: i128 = n
                .trim()
                .parse()
                .map_err(|_| Error::InvalidNumber(s.to_string()))?;
            let denom: i128 = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidNumber(s.to_string()))?;
            return Rational::new(numer, denom);
        }
        let (sign, body) = match s.strip_prefix('-') {
            Some(rest) => (-1i128, rest),
            None => (1i128, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::InvalidNumber(s.to_string()));
        }
        let digits_ok = |d: &str| d.chars().all(|c| c.is_ascii_digit());
        if !digits_ok(int_part) || !digits_ok(frac_part) {
            return Err(Error::InvalidNumber(s.to_string()));
        }
        let int: i128 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| Error::InvalidNumber(s.to_string()))?
        };
        let mut numer = int;
        let mut denom = 1i128;
        for c in frac_part.chars() {
            numer = numer
                .checked_mul(10)
                .and_then(|v| v.checked_add((c as u8 - b'0') as i128))
                .ok_or_else(|| Error::InvalidNumber(s.to_string()))?;
            denom = denom
                .checked_mul(10)
                .ok_or_else(|| Error::InvalidNumber(s.to_string()))?;
        }
        Ok(Rational(Ratio::new(sign * numer, denom)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
