use alloc::vec::Vec;

use crate::stats::SECONDS_PER_DAY;

/// Number of 30-second slots in a day.
pub const HALF_MINUTES_PER_DAY: usize = 2880;

/// Which days count as days off (UTC calendar days).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayCalendar {
    pub weekends_off: bool,
    /// Extra days off, as day numbers since 1970-01-01.
    pub holidays: Vec<i64>,
}

impl Default for DayCalendar {
    fn default() -> Self {
        Self {
            weekends_off: true,
            holidays: Vec::new(),
        }
    }
}

impl DayCalendar {
    pub fn is_day_off(&self, day: i64) -> bool {
        // 1970-01-01 was a Thursday; 0 = Sunday, 6 = Saturday.
        let weekday = (day + 4).rem_euclid(7);
        (self.weekends_off && (weekday == 0 || weekday == 6)) || self.holidays.contains(&day)
    }
}

pub fn day_number(ts: f64) -> i64 {
    libm::floor(ts / SECONDS_PER_DAY) as i64
}

/// Partition of the timeline into recurring "periods of the day".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimePartition {
    /// A single subset covering every instant (time-homogeneous models).
    Single,
    /// 24 subsets, one per hour of the (UTC) day.
    Hourly,
    /// 5760 subsets: 2880 thirty-second slots for working days followed by
    /// 2880 for days off.
    HalfMinuteDayType(DayCalendar),
}

impl TimePartition {
    pub fn subsets(&self) -> usize {
        match self {
            TimePartition::Single => 1,
            TimePartition::Hourly => 24,
            TimePartition::HalfMinuteDayType(_) => 2 * HALF_MINUTES_PER_DAY,
        }
    }

    /// Subset index of the instant `ts` (epoch seconds).
    pub fn index(&self, ts: f64) -> usize {
        let in_day = ts - day_number(ts) as f64 * SECONDS_PER_DAY;
        match self {
            TimePartition::Single => 0,
            TimePartition::Hourly => ((in_day / 3600.0) as usize).min(23),
            TimePartition::HalfMinuteDayType(cal) => {
                let slot = ((in_day / 30.0) as usize).min(HALF_MINUTES_PER_DAY - 1);
                if cal.is_day_off(day_number(ts)) {
                    HALF_MINUTES_PER_DAY + slot
                } else {
                    slot
                }
            }
        }
    }

    /// Shortest span that visits the daily cycle once (0 for `Single`).
    pub fn cycle_seconds(&self) -> f64 {
        match self {
            TimePartition::Single => 0.0,
            _ => SECONDS_PER_DAY,
        }
    }
}
