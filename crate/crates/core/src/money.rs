//! Exact money amounts in minor currency units.
//!
//! Every amount is an `i64` count of minor units (kobo for NGN). There is no
//! floating point anywhere on the money path; the only rounding primitive is
//! [`div_round_half_up`], which works on exact integer ratios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoneyError {
    #[error("currency mismatch: {0} vs {1}")]
    CurrencyMismatch(Currency, Currency),
    #[error("money arithmetic overflow")]
    Overflow,
    #[error("invalid currency code {0:?}")]
    InvalidCurrency(String),
    #[error("invalid money literal {0:?}")]
    InvalidLiteral(String),
}

/// Three-letter upper-case currency code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Currency([u8; 3]);

impl Currency {
    pub const NGN: Currency = Currency(*b"NGN");

    pub fn new(code: &str) -> Result<Self, MoneyError> {
        let bytes = code.as_bytes();
        if bytes.len() != 3 || !bytes.iter().all(u8::is_ascii_uppercase) {
            return Err(MoneyError::InvalidCurrency(code.to_string()));
        }
        Ok(Currency([bytes[0], bytes[1], bytes[2]]))
    }

    pub fn as_str(&self) -> &str {
        // constructed only from ASCII upper-case letters
        std::str::from_utf8(&self.0).expect("currency code is ASCII")
    }
}

impl Default for Currency {
    fn default() -> Self {
        Currency::NGN
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Currency({})", self.as_str())
    }
}

impl Serialize for Currency {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Currency {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = String::deserialize(d)?;
        Currency::new(&code).map_err(serde::de::Error::custom)
    }
}

/// An exact amount of money.
///
/// Serialized as `{"amount_minor": <integer>, "currency": "<code>"}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Money {
    amount_minor: i64,
    #[serde(default)]
    currency: Currency,
}

impl Money {
    pub const fn new(amount_minor: i64, currency: Currency) -> Self {
        Money { amount_minor, currency }
    }

    /// Amount in kobo.
    pub const fn ngn(amount_minor: i64) -> Self {
        Money::new(amount_minor, Currency::NGN)
    }

    pub const fn zero(currency: Currency) -> Self {
        Money::new(0, currency)
    }

    pub const fn amount_minor(&self) -> i64 {
        self.amount_minor
    }

    pub const fn currency(&self) -> Currency {
        self.currency
    }

    pub fn is_negative(&self) -> bool {
        self.amount_minor < 0
    }

    fn same_currency(&self, other: &Money) -> Result<(), MoneyError> {
        if self.currency == other.currency {
            Ok(())
        } else {
            Err(MoneyError::CurrencyMismatch(self.currency, other.currency))
        }
    }

    pub fn checked_add(self, other: Money) -> Result<Money, MoneyError> {
        self.same_currency(&other)?;
        let amount = self
            .amount_minor
            .checked_add(other.amount_minor)
            .ok_or(MoneyError::Overflow)?;
        Ok(Money::new(amount, self.currency))
    }

    pub fn checked_sub(self, other: Money) -> Result<Money, MoneyError> {
        self.same_currency(&other)?;
        let amount = self
            .amount_minor
            .checked_sub(other.amount_minor)
            .ok_or(MoneyError::Overflow)?;
        Ok(Money::new(amount, self.currency))
    }

    /// `self × numerator / denominator`, evaluated exactly and rounded half-up
    /// to the minor unit.
    pub fn mul_ratio_round_half_up(
        self,
        numerator: i64,
        denominator: i64,
    ) -> Result<Money, MoneyError> {
        let product = i128::from(self.amount_minor) * i128::from(numerator);
        let amount = div_round_half_up(product, i128::from(denominator));
        let amount = i64::try_from(amount).map_err(|_| MoneyError::Overflow)?;
        Ok(Money::new(amount, self.currency))
    }

    /// Sum of a sequence of amounts, all in `currency`.
    pub fn sum<'a, I>(currency: Currency, items: I) -> Result<Money, MoneyError>
    where
        I: IntoIterator<Item = &'a Money>,
    {
        items
            .into_iter()
            .try_fold(Money::zero(currency), |acc, m| acc.checked_add(*m))
    }

    /// Major units with exactly two decimals, no grouping: `112500.00`.
    pub fn to_major_string(&self) -> String {
        let sign = if self.amount_minor < 0 { "-" } else { "" };
        let abs = self.amount_minor.unsigned_abs();
        format!("{sign}{}.{:02}", abs / 100, abs % 100)
    }

    /// Parses `1234`, `1234.5` or `1234.56` (optionally signed) as major units.
    pub fn parse_major(text: &str, currency: Currency) -> Result<Money, MoneyError> {
        parse_major(text, currency, false)
    }

    /// Parses exactly the form produced by [`Money::to_major_string`].
    pub fn parse_major_exact(text: &str, currency: Currency) -> Result<Money, MoneyError> {
        parse_major(text, currency, true)
    }
}

fn parse_major(text: &str, currency: Currency, exact: bool) -> Result<Money, MoneyError> {
    let bad = || MoneyError::InvalidLiteral(text.to_string());
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, Some(f)),
        None => (body, None),
    };
    if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if exact && whole.len() > 1 && whole.starts_with('0') {
        return Err(bad());
    }
    let cents = match frac {
        Some(f) if exact && f.len() != 2 => return Err(bad()),
        None if exact => return Err(bad()),
        None => 0,
        Some(f) => {
            if f.is_empty() || f.len() > 2 || !f.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let v: i64 = f.parse().map_err(|_| bad())?;
            if f.len() == 1 {
                v * 10
            } else {
                v
            }
        }
    };
    let whole: i64 = whole.parse().map_err(|_| bad())?;
    let abs = whole
        .checked_mul(100)
        .and_then(|w| w.checked_add(cents))
        .ok_or(MoneyError::Overflow)?;
    if exact && negative && abs == 0 {
        return Err(bad());
    }
    Ok(Money::new(if negative { -abs } else { abs }, currency))
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.currency, self.to_major_string())
    }
}

impl fmt::Debug for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Money({} {})", self.currency, self.to_major_string())
    }
}

impl FromStr for Money {
    type Err = MoneyError;

    /// Accepts `2500.00` (NGN implied) or `NGN 2500.00`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().split_once(' ') {
            Some((code, amount)) => Money::parse_major(amount.trim(), Currency::new(code)?),
            None => Money::parse_major(s.trim(), Currency::NGN),
        }
    }
}

/// `numerator / denominator` rounded half-up (towards positive infinity on ties).
///
/// Panics if `denominator` is not positive.
pub fn div_round_half_up(numerator: i128, denominator: i128) -> i128 {
    assert!(denominator > 0, "denominator must be positive");
    (2 * numerator + denominator).div_euclid(2 * denominator)
}
