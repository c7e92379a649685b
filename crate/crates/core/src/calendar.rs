//! Timestep → weekly slot mapping.
//!
//! Days of week are numbered from 0 (Monday) to 6 (Sunday). A timestep whose
//! local calendar date is a listed holiday takes Sunday's day of week but keeps
//! its time of day, so a holiday at 08:00 lands on Sunday 08:00.

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::panel::DatasetMeta;

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const SUNDAY: usize = 6;

/// A proleptic Gregorian calendar date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CivilDate {
    year: i32,
    month: u8,
    day: u8,
}

impl CivilDate {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return Err(Error::InvalidDate(alloc::format!(
                "{year:04}-{month:02}-{day:02}"
            )));
        }
        Ok(Self { year, month, day })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u8 {
        self.month
    }

    pub fn day(&self) -> u8 {
        self.day
    }

    /// Days since 1970-01-01.
    pub fn to_days(&self) -> i64 {
        // Hinnant's days_from_civil.
        let y = i64::from(self.year) - i64::from(self.month <= 2);
        let era = y.div_euclid(400);
        let yoe = y - era * 400;
        let m = i64::from(self.month);
        let mp = if m > 2 { m - 3 } else { m + 9 };
        let doy = (153 * mp + 2) / 5 + i64::from(self.day) - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146_097 + doe - 719_468
    }

    pub fn from_days(days: i64) -> Self {
        let z = days + 719_468;
        let era = z.div_euclid(146_097);
        let doe = z - era * 146_097;
        let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
        let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        let mp = (5 * doy + 2) / 153;
        let day = (doy - (153 * mp + 2) / 5 + 1) as u8;
        let month = if mp < 10 { mp + 3 } else { mp - 9 } as u8;
        let year = (yoe + era * 400 + i64::from(month <= 2)) as i32;
        Self { year, month, day }
    }

    /// Monday = 0 … Sunday = 6.
    pub fn weekday(&self) -> usize {
        weekday_of_days(self.to_days())
    }
}

impl fmt::Display for CivilDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for CivilDate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDate(s.to_string());
        let mut parts = s.trim().splitn(3, '-');
        let year = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let month = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let day = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        Self::new(year, month, day)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for CivilDate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for CivilDate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = <alloc::string::String as serde::Deserialize>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn is_leap(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

fn weekday_of_days(days: i64) -> usize {
    // 1970-01-01 was a Thursday.
    (days + 3).rem_euclid(7) as usize
}

/// Splits seconds since the epoch into a date and a second-of-day.
pub fn civil_from_seconds(seconds: i64) -> (CivilDate, u32) {
    let days = seconds.div_euclid(SECONDS_PER_DAY);
    let sod = seconds.rem_euclid(SECONDS_PER_DAY) as u32;
    (CivilDate::from_days(days), sod)
}

/// Slot counts for a sampling granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeeklyIndex {
    pub slots_per_day: usize,
    pub slots_per_week: usize,
}

impl WeeklyIndex {
    pub fn new(granularity_s: u32) -> Result<Self> {
        if granularity_s == 0 || SECONDS_PER_DAY % i64::from(granularity_s) != 0 {
            return Err(Error::InvalidMeta(alloc::format!(
                "granularity {granularity_s}s does not divide a day"
            )));
        }
        let slots_per_day = (SECONDS_PER_DAY / i64::from(granularity_s)) as usize;
        Ok(Self {
            slots_per_day,
            slots_per_week: 7 * slots_per_day,
        })
    }
}

/// Precomputed calendar for one dataset grid.
#[derive(Debug, Clone)]
pub struct WeeklyCalendar {
    index: WeeklyIndex,
    granularity_s: i64,
    origin_local: i64,
    origin_day: i64,
    origin_weekday: usize,
    weekdays_only: bool,
    holidays: BTreeSet<i64>,
    len: usize,
}

impl WeeklyCalendar {
    pub fn new(meta: &DatasetMeta) -> Result<Self> {
        let index = WeeklyIndex::new(meta.granularity_s)?;
        let origin_local = meta.start_time + meta.timezone_offset_s;
        let origin_day = origin_local.div_euclid(SECONDS_PER_DAY);
        let origin_weekday = weekday_of_days(origin_day);
        if meta.weekdays_only && origin_weekday >= 5 {
            return Err(Error::InvalidMeta(
                "weekdays_only dataset must start on a weekday".into(),
            ));
        }
        Ok(Self {
            index,
            granularity_s: i64::from(meta.granularity_s),
            origin_local,
            origin_day,
            origin_weekday,
            weekdays_only: meta.weekdays_only,
            holidays: meta.holidays.iter().map(CivilDate::to_days).collect(),
            len: meta.num_timesteps,
        })
    }

    pub fn index(&self) -> WeeklyIndex {
        self.index
    }

    /// Local calendar day number and second-of-day of a timestep.
    fn local_day(&self, timestep: usize) -> (i64, i64) {
        let grid = self.origin_local + timestep as i64 * self.granularity_s;
        let elapsed = grid.div_euclid(SECONDS_PER_DAY) - self.origin_day;
        let sod = grid.rem_euclid(SECONDS_PER_DAY);
        if !self.weekdays_only {
            return (self.origin_day + elapsed, sod);
        }
        // The grid skips Saturdays and Sundays: day `elapsed` is the
        // `elapsed`-th weekday counted from the origin.
        let weeks = elapsed.div_euclid(5);
        let rem = elapsed.rem_euclid(5);
        let skip = if self.origin_weekday as i64 + rem >= 5 { 2 } else { 0 };
        (self.origin_day + weeks * 7 + rem + skip, sod)
    }

    /// Local wall-clock seconds since the epoch of a timestep.
    pub fn local_seconds(&self, timestep: usize) -> i64 {
        let (day, sod) = self.local_day(timestep);
        day * SECONDS_PER_DAY + sod
    }

    /// Local calendar date of a timestep.
    pub fn date(&self, timestep: usize) -> CivilDate {
        CivilDate::from_days(self.local_day(timestep).0)
    }

    /// Weekly slot without a range check.
    #[inline]
    pub fn slot(&self, timestep: usize) -> usize {
        let (day, sod) = self.local_day(timestep);
        let dow = if self.holidays.contains(&day) {
            SUNDAY
        } else {
            weekday_of_days(day)
        };
        let slot_of_day = (sod / self.granularity_s) as usize;
        dow * self.index.slots_per_day + slot_of_day
    }

    /// Slots for every timestep of the dataset.
    pub fn slots(&self) -> Vec<usize> {
        (0..self.len).map(|t| self.slot(t)).collect()
    }
}

/// Weekly slot of `timestep` in `meta`'s grid, in `[0, slots_per_week)`.
pub fn weekly_slot(timestep: usize, meta: &DatasetMeta) -> Result<usize> {
    if timestep >= meta.num_timesteps {
        return Err(Error::TimestepOutOfRange {
            timestep,
            len: meta.num_timesteps,
        });
    }
    Ok(WeeklyCalendar::new(meta)?.slot(timestep))
}
