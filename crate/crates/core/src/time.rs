//! Service-day clock arithmetic.
//!
//! All times are integer seconds since the service day's midnight. Trips that
//! run past midnight keep counting (`25:10:00` is 90600), as GTFS does.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Seconds since service-day midnight, or a duration in seconds.
pub type Secs = i64;

pub const MINUTE: Secs = 60;

/// Parses `H:MM:SS` / `HH:MM:SS`; hours may exceed 23.
pub fn parse_clock(token: &str) -> Result<Secs, Error> {
    let bad = || Error::Argument(format!("bad time token `{token}`"));
    let mut parts = token.trim().split(':');
    let (h, m, s) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(h), Some(m), Some(s), None) => (h, m, s),
        _ => return Err(bad()),
    };
    let field = |f: &str, max: Option<i64>| -> Result<i64, Error> {
        if f.is_empty() || f.len() > 3 || !f.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let v: i64 = f.parse().map_err(|_| bad())?;
        match max {
            Some(max) if v > max => Err(bad()),
            _ => Ok(v),
        }
    };
    let (h, m, s) = (field(h, None)?, field(m, Some(59))?, field(s, Some(59))?);
    Ok(h * 3600 + m * 60 + s)
}

/// Formats as `HH:MM:SS`; negative values are rendered with a leading `-`.
pub fn format_clock(t: Secs) -> String {
    let sign = if t < 0 { "-" } else { "" };
    let t = t.abs();
    format!("{sign}{:02}:{:02}:{:02}", t / 3600, (t / 60) % 60, t % 60)
}

/// A calendar month, the unit of clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthKey {
    pub year: i32,
    pub month: u32,
}

impl MonthKey {
    pub fn new(year: i32, month: u32) -> Self {
        MonthKey { year, month }
    }

    pub fn of(date: NaiveDate) -> Self {
        MonthKey::new(date.year(), date.month())
    }

    pub fn first_day(self) -> Option<NaiveDate> {
        NaiveDate::from_ymd_opt(self.year, self.month, 1)
    }

    pub fn days_in_month(self) -> u32 {
        let Some(first) = self.first_day() else {
            return 0;
        };
        let next = if self.month == 12 {
            NaiveDate::from_ymd_opt(self.year + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(self.year, self.month + 1, 1)
        };
        next.map(|n| (n - first).num_days() as u32).unwrap_or(0)
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Argument(format!("bad month `{s}`, expected YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let key = MonthKey::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?);
        if key.first_day().is_none() {
            return Err(bad());
        }
        Ok(key)
    }
}

impl Serialize for MonthKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
