//! Domain model: people, payment spells, other dated activity, observation
//! windows and the outcome variable.

mod history;
pub mod io;
mod outcome;
mod payment;

pub use history::{ActivityKind, ActivityRecord, Cohort, PersonHistory, SpellRecord};
pub use outcome::{covered_days, outcome_proportion, OutcomeFilter};
pub use payment::{classify_payment, PaymentCategory, PaymentCode, PaymentCodeKey, PaymentFilter, Subfamily};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Earliest and latest dates a spell may carry.
pub const DATA_START: NaiveDate = match NaiveDate::from_ymd_opt(2000, 1, 1) {
    Some(d) => d,
    None => unreachable!(),
};
pub const DATA_END: NaiveDate = match NaiveDate::from_ymd_opt(2019, 10, 14) {
    Some(d) => d,
    None => unreachable!(),
};

/// Integer day number used for all interval arithmetic.
#[inline]
pub fn day_number(d: NaiveDate) -> i64 {
    d.num_days_from_ce() as i64
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| Error::invalid(format!("bad date {s:?}: {e}")))
}

/// Closed interval of calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationWindow {
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
}

impl ObservationWindow {
    pub fn new(first_day: NaiveDate, last_day: NaiveDate) -> Result<Self> {
        if first_day > last_day {
            return Err(Error::EmptyWindow);
        }
        Ok(Self {
            first_day,
            last_day,
        })
    }

    /// 1 January of `first` through 31 December of `last`.
    pub fn years(first: i32, last: i32) -> Result<Self> {
        Self::new(date(first, 1, 1), date(last, 12, 31))
    }

    /// The outcome window, 2015-01-01 to 2018-12-31.
    pub fn outcome() -> Self {
        Self::years(2015, 2018).expect("static window")
    }

    /// The predictor window, calendar 2014.
    pub fn baseline() -> Self {
        Self::years(2014, 2014).expect("static window")
    }

    /// Inclusive day count; zero or negative for an inverted window.
    pub fn day_count(&self) -> i64 {
        day_number(self.last_day) - day_number(self.first_day) + 1
    }

    pub fn first(&self) -> i64 {
        day_number(self.first_day)
    }

    pub fn last(&self) -> i64 {
        day_number(self.last_day)
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.first_day <= d && d <= self.last_day
    }

    /// Parse `YYYY-YYYY` (whole calendar years) or `YYYY-MM-DD..YYYY-MM-DD`.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some((a, b)) = s.split_once("..") {
            return Self::new(parse_date(a)?, parse_date(b)?);
        }
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::invalid(format!("bad window {s:?}")))?;
        let a: i32 = a
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad window {s:?}")))?;
        let b: i32 = b
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad window {s:?}")))?;
        Self::years(a, b)
    }
}

/// Inclusive day count of a window.
pub fn day_count(w: &ObservationWindow) -> i64 {
    w.day_count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_counts() {
        assert_eq!(ObservationWindow::years(2015, 2018).unwrap().day_count(), 1461);
        assert_eq!(ObservationWindow::years(2014, 2014).unwrap().day_count(), 365);
        let w = ObservationWindow::new(date(2016, 2, 28), date(2016, 3, 1)).unwrap();
        assert_eq!(w.day_count(), 3);
    }

    #[test]
    fn inverted_window_rejected() {
        assert!(ObservationWindow::new(date(2016, 1, 2), date(2016, 1, 1)).is_err());
    }

    #[test]
    fn parse_windows() {
        assert_eq!(
            ObservationWindow::parse("2011-2014").unwrap(),
            ObservationWindow::years(2011, 2014).unwrap()
        );
        let w = ObservationWindow::parse("2014-03-01..2014-03-31").unwrap();
        assert_eq!(w.day_count(), 31);
        assert!(ObservationWindow::parse("2014").is_err());
    }
}
