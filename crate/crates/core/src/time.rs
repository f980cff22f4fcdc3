// SPDX-License-Identifier: Apache-2.0

//! Time-bounded credentials.
//!
//! System life is split into `T` one-day epochs starting at a genesis date.
//! A key carries its expiry epoch as a `ceil(log2 T)`-bit big-endian tag and
//! stays usable up to and including that epoch.

use std::fmt;
use std::sync::RwLock;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime, Utc};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimeError {
    #[error("system lifetime must be at least 2 epochs, got {0}")]
    InvalidLifetime(u64),
    #[error("date {0} is before the genesis date")]
    DateBeforeGenesis(NaiveDate),
    #[error("expiry epoch {expiry} is outside the system lifetime of {lifetime} epochs")]
    LifetimeExceeded { expiry: u64, lifetime: u64 },
    #[error("key expired at epoch {expiry}, current epoch is {current}")]
    KeyExpired { expiry: u64, current: u64 },
    #[error("malformed time tag")]
    MalformedTag,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EpochConfig {
    genesis: NaiveDate,
    lifetime: u64,
}

impl EpochConfig {
    pub fn new(genesis: NaiveDate, lifetime: u64) -> Result<Self, TimeError> {
        if lifetime < 2 {
            return Err(TimeError::InvalidLifetime(lifetime));
        }
        Ok(EpochConfig { genesis, lifetime })
    }

    pub fn genesis(&self) -> NaiveDate {
        self.genesis
    }

    /// `T`, the number of epochs in the system life.
    pub fn lifetime(&self) -> u64 {
        self.lifetime
    }

    /// `ceil(log2 T)`.
    pub fn tag_width(&self) -> u32 {
        // T >= 2, so T - 1 >= 1
        u64::BITS - (self.lifetime - 1).leading_zeros()
    }

    /// Whole days since genesis. The time of day does not move the epoch.
    pub fn epoch_of(&self, date: NaiveDate, _time: NaiveTime) -> Result<u64, TimeError> {
        self.epoch_of_date(date)
    }

    pub fn epoch_of_date(&self, date: NaiveDate) -> Result<u64, TimeError> {
        let days = (date - self.genesis).num_days();
        u64::try_from(days).map_err(|_| TimeError::DateBeforeGenesis(date))
    }

    pub fn epoch_at(&self, now: NaiveDateTime) -> Result<u64, TimeError> {
        self.epoch_of(now.date(), now.time())
    }

    /// Encodes the expiry epoch `epoch_of(issue_date) + validity`.
    pub fn time_encode(&self, issue_date: NaiveDate, validity: u64) -> Result<TimeTag, TimeError> {
        let issued = self.epoch_of_date(issue_date)?;
        let expiry = issued.saturating_add(validity);
        self.tag_for_epoch(expiry)
    }

    pub fn tag_for_epoch(&self, expiry: u64) -> Result<TimeTag, TimeError> {
        if expiry >= self.lifetime {
            return Err(TimeError::LifetimeExceeded { expiry, lifetime: self.lifetime });
        }
        Ok(TimeTag { width: self.tag_width(), epoch: expiry })
    }

    /// Succeeds while `current_epoch <= expiry_epoch`.
    pub fn check_unexpired(&self, tag: &TimeTag, date: NaiveDate, time: NaiveTime) -> Result<(), TimeError> {
        self.validate_tag(tag)?;
        let current = self.epoch_of(date, time)?;
        if current <= tag.epoch {
            Ok(())
        } else {
            Err(TimeError::KeyExpired { expiry: tag.epoch, current })
        }
    }

    pub fn validate_tag(&self, tag: &TimeTag) -> Result<(), TimeError> {
        if tag.width != self.tag_width() || tag.epoch >= self.lifetime {
            return Err(TimeError::MalformedTag);
        }
        Ok(())
    }
}

/// Expiry epoch as a fixed-width bit string, most significant bit first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeTag {
    width: u32,
    epoch: u64,
}

impl TimeTag {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn expiry_epoch(&self) -> u64 {
        self.epoch
    }

    /// `'0'`/`'1'` characters, MSB first.
    pub fn bits(&self) -> String {
        (0..self.width).rev().map(|i| if self.epoch >> i & 1 == 1 { '1' } else { '0' }).collect()
    }

    /// Parses a bit string. The width is taken from the string itself.
    pub fn from_bits(bits: &str) -> Result<TimeTag, TimeError> {
        if bits.is_empty() || bits.len() > 64 {
            return Err(TimeError::MalformedTag);
        }
        let mut epoch = 0u64;
        for b in bits.bytes() {
            epoch = epoch << 1
                | match b {
                    b'0' => 0,
                    b'1' => 1,
                    _ => return Err(TimeError::MalformedTag),
                };
        }
        Ok(TimeTag { width: bits.len() as u32, epoch })
    }
}

impl fmt::Debug for TimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimeTag({} -> epoch {})", self.bits(), self.epoch)
    }
}

/// Injected source of "now" (UTC).
pub trait Clock: Send + Sync {
    fn now(&self) -> NaiveDateTime;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> NaiveDateTime {
        Utc::now().naive_utc()
    }
}

/// Settable clock for tests and `--now` overrides.
#[derive(Debug)]
pub struct ManualClock(RwLock<NaiveDateTime>);

impl ManualClock {
    pub fn new(at: NaiveDateTime) -> Self {
        ManualClock(RwLock::new(at))
    }

    pub fn at_date(date: NaiveDate) -> Self {
        ManualClock::new(date.and_time(NaiveTime::MIN))
    }

    pub fn set(&self, at: NaiveDateTime) {
        *self.0.write().unwrap() = at;
    }

    pub fn advance_days(&self, days: i64) {
        let mut now = self.0.write().unwrap();
        *now += chrono::Duration::days(days);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> NaiveDateTime {
        *self.0.read().unwrap()
    }
}

pub fn parse_date(s: &str) -> Result<NaiveDate, chrono::ParseError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
}

pub fn parse_time(s: &str) -> Result<NaiveTime, chrono::ParseError> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn cfg(t: u64) -> EpochConfig {
        EpochConfig::new(day(2024, 1, 1), t).unwrap()
    }

    fn noon() -> NaiveTime {
        NaiveTime::from_hms_opt(12, 0, 0).unwrap()
    }

    // integer-log oracle: smallest w with 2^w >= T
    fn ceil_log2_oracle(t: u64) -> u32 {
        let mut w = 0;
        while (1u128 << w) < t as u128 {
            w += 1;
        }
        w
    }

    #[test]
    fn tag_width() {
        assert_eq!(cfg(512).tag_width(), 9);
        assert_eq!(ceil_log2_oracle(512), 9);
        for t in 2..5000 {
            assert_eq!(cfg(t).tag_width(), ceil_log2_oracle(t), "T={t}");
        }
        assert_eq!(cfg(365).tag_width(), 9);
        assert_eq!(cfg(2).tag_width(), 1);
        assert_eq!(EpochConfig::new(day(2024, 1, 1), 1), Err(TimeError::InvalidLifetime(1)));
    }

    #[test]
    fn encode_examples() {
        let c = cfg(2);
        assert_eq!(c.time_encode(c.genesis(), 1).unwrap().bits(), "1");
        let c = cfg(365);
        assert_eq!(c.time_encode(c.genesis(), 400), Err(TimeError::LifetimeExceeded { expiry: 400, lifetime: 365 }));
        assert_eq!(c.time_encode(day(2023, 12, 31), 1), Err(TimeError::DateBeforeGenesis(day(2023, 12, 31))));
        assert_eq!(c.time_encode(day(2024, 1, 11), 5).unwrap().bits(), "000001111");
    }

    #[test]
    fn epoch_of_examples() {
        let c = cfg(100);
        assert_eq!(c.epoch_of(day(2024, 1, 1), NaiveTime::MIN), Ok(0));
        assert_eq!(c.epoch_of(day(2024, 1, 1), noon()), Ok(0));
        assert_eq!(c.epoch_of(day(2024, 1, 11), noon()), Ok(10));
        assert_eq!(c.epoch_of(day(2023, 12, 31), noon()), Err(TimeError::DateBeforeGenesis(day(2023, 12, 31))));
    }

    #[test]
    fn expiry_boundary_is_inclusive() {
        let c = cfg(100);
        let tag = c.tag_for_epoch(10).unwrap();
        assert!(c.check_unexpired(&tag, day(2024, 1, 11), noon()).is_ok());
        assert_eq!(
            c.check_unexpired(&tag, day(2024, 1, 12), NaiveTime::MIN),
            Err(TimeError::KeyExpired { expiry: 10, current: 11 })
        );
        let max = c.tag_for_epoch(99).unwrap();
        assert!(c.check_unexpired(&max, c.genesis(), noon()).is_ok());
    }

    #[test]
    fn roundtrip_exhaustive() {
        for t in [2u64, 3, 7, 365, 512, 1000, 4096] {
            let c = cfg(t);
            for e in 0..t {
                let tag = c.tag_for_epoch(e).unwrap();
                assert_eq!(tag.bits().len() as u32, c.tag_width());
                let back = TimeTag::from_bits(&tag.bits()).unwrap();
                assert_eq!(back, tag);
                assert_eq!(back.expiry_epoch(), e);
            }
        }
    }

    #[test]
    fn monotone_in_current_epoch() {
        let c = cfg(64);
        let tag = c.tag_for_epoch(20).unwrap();
        let results: Vec<bool> = (0..64)
            .map(|k| {
                let d = c.genesis() + chrono::Duration::days(k);
                c.check_unexpired(&tag, d, noon()).is_ok()
            })
            .collect();
        let first_fail = results.iter().position(|ok| !ok).unwrap();
        assert_eq!(first_fail, 21);
        assert!(results[first_fail..].iter().all(|ok| !ok));
    }

    #[test]
    fn malformed_bits() {
        assert_eq!(TimeTag::from_bits(""), Err(TimeError::MalformedTag));
        assert_eq!(TimeTag::from_bits("0120"), Err(TimeError::MalformedTag));
        let c = cfg(365);
        // right width but epoch >= T
        let tag = TimeTag::from_bits("111111111").unwrap();
        assert_eq!(c.validate_tag(&tag), Err(TimeError::MalformedTag));
        let short = TimeTag::from_bits("1").unwrap();
        assert_eq!(c.validate_tag(&short), Err(TimeError::MalformedTag));
    }

    #[test]
    fn manual_clock_advances() {
        let clock = ManualClock::at_date(day(2024, 1, 1));
        clock.advance_days(3);
        assert_eq!(clock.now().date(), day(2024, 1, 4));
        assert_eq!(parse_date("2024-02-29").unwrap(), day(2024, 2, 29));
        assert!(parse_date("2024-02-30").is_err());
        assert!(parse_time("25:00:00").is_err());
    }
}
