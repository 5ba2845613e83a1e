use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid pay period {0:?}; expected YYYY-MM")]
pub struct PeriodError(pub String);

/// A calendar month. Ordered by `(year, month)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PayPeriod {
    year: i32,
    month: u8,
}

impl PayPeriod {
    pub fn new(year: i32, month: u8) -> Result<Self, PeriodError> {
        if !(1..=12).contains(&month) || !(1..=9999).contains(&year) {
            return Err(PeriodError(format!("{year}-{month}")));
        }
        Ok(PayPeriod { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn days_in_month(&self) -> u32 {
        match self.month {
            1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
            4 | 6 | 9 | 11 => 30,
            _ if is_leap(self.year) => 29,
            _ => 28,
        }
    }

    pub fn next(&self) -> PayPeriod {
        if self.month == 12 {
            PayPeriod { year: self.year + 1, month: 1 }
        } else {
            PayPeriod { year: self.year, month: self.month + 1 }
        }
    }
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

impl fmt::Display for PayPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for PayPeriod {
    type Err = PeriodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PeriodError(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        if !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        PayPeriod::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for PayPeriod {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PayPeriod {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let p: PayPeriod = "2021-06".parse().unwrap();
        assert_eq!((p.year(), p.month()), (2021, 6));
        assert_eq!(p.to_string(), "2021-06");
        assert!("2021-13".parse::<PayPeriod>().is_err());
        assert!("2021-00".parse::<PayPeriod>().is_err());
        assert!("2021-6".parse::<PayPeriod>().is_err());
        assert!("21-06".parse::<PayPeriod>().is_err());
    }

    #[test]
    fn ordering_is_year_then_month() {
        let a = PayPeriod::new(2020, 12).unwrap();
        let b = PayPeriod::new(2021, 1).unwrap();
        assert!(a < b);
        assert_eq!(a.next(), b);
    }

    #[test]
    fn month_lengths() {
        assert_eq!(PayPeriod::new(2021, 6).unwrap().days_in_month(), 30);
        assert_eq!(PayPeriod::new(2021, 2).unwrap().days_in_month(), 28);
        assert_eq!(PayPeriod::new(2024, 2).unwrap().days_in_month(), 29);
        assert_eq!(PayPeriod::new(1900, 2).unwrap().days_in_month(), 28);
        assert_eq!(PayPeriod::new(2000, 2).unwrap().days_in_month(), 29);
    }
}
