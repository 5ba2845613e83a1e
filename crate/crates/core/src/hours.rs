use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid hours {0:?}; expected a multiple of 0.25")]
pub struct HoursError(pub String);

/// Worked time as a count of 15-minute units.
///
/// Signed so that a malformed (negative) card can be represented and then
/// rejected by verification.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuarterHours(i64);

impl QuarterHours {
    pub const ZERO: QuarterHours = QuarterHours(0);

    pub const fn new(quarters: i64) -> Self {
        QuarterHours(quarters)
    }

    pub const fn from_whole_hours(hours: i64) -> Self {
        QuarterHours(hours * 4)
    }

    pub const fn quarters(&self) -> i64 {
        self.0
    }

    pub fn checked_add(self, other: QuarterHours) -> Option<QuarterHours> {
        self.0.checked_add(other.0).map(QuarterHours)
    }
}

impl fmt::Display for QuarterHours {
    /// Two decimals: `45.00`, `7.25`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 4, (abs % 4) * 25)
    }
}

impl FromStr for QuarterHours {
    type Err = HoursError;

    /// Accepts `45`, `45.5`, `45.25`, optionally signed.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HoursError(s.to_string());
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let quarter = match frac {
            "" | "0" | "00" => 0,
            "25" => 1,
            "5" | "50" => 2,
            "75" => 3,
            _ => return Err(bad()),
        };
        let whole: i64 = whole.parse().map_err(|_| bad())?;
        let q = whole
            .checked_mul(4)
            .and_then(|w| w.checked_add(quarter))
            .ok_or_else(bad)?;
        Ok(QuarterHours(if negative { -q } else { q }))
    }
}
