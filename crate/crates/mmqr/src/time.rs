//! Quarterly and monthly time indexing for the panel.

use std::fmt;

use crate::error::{Error, Result};

/// A calendar quarter, totally ordered by (year, quarter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuarterId {
    year: i32,
    quarter: u8,
}

impl QuarterId {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::schema(format!(
                "quarter must be in 1..=4, got {quarter} (year {year})"
            )));
        }
        Ok(QuarterId { year, quarter })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn quarter(&self) -> u8 {
        self.quarter
    }

    /// Position on the contiguous quarter axis (4 per year).
    fn ordinal(&self) -> i64 {
        self.year as i64 * 4 + (self.quarter as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Self {
        let year = ord.div_euclid(4) as i32;
        let quarter = (ord.rem_euclid(4) + 1) as u8;
        QuarterId { year, quarter }
    }

    /// The quarter `k` steps later (`k` may be negative).
    pub fn offset(&self, k: i64) -> Self {
        Self::from_ordinal(self.ordinal() + k)
    }

    /// Number of quarters from `self` to `other` (positive if `other` is later).
    pub fn quarters_until(&self, other: &QuarterId) -> i64 {
        other.ordinal() - self.ordinal()
    }

    /// Inclusive consecutive range `[first, last]`.
    pub fn range(first: QuarterId, last: QuarterId) -> Vec<QuarterId> {
        (first.ordinal()..=last.ordinal()).map(Self::from_ordinal).collect()
    }
}

impl fmt::Display for QuarterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

/// A calendar month; used only by the monthly inflation ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthId {
    year: i32,
    month: u8,
}

impl MonthId {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::schema(format!(
                "month must be in 1..=12, got {month} (year {year})"
            )));
        }
        Ok(MonthId { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    /// The quarter containing this month.
    pub fn quarter(&self) -> QuarterId {
        QuarterId { year: self.year, quarter: (self.month - 1) / 3 + 1 }
    }
}

impl fmt::Display for MonthId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}", self.year, self.month)
    }
}
