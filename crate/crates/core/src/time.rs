//! Archive timestamps and the clock abstraction used by the rate limiter.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const FORMAT: &str = "%Y%m%d%H%M%S";

/// A 14-digit `YYYYMMDDhhmmss` archive timestamp, always UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(NaiveDateTime);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid 14-digit timestamp {0:?}")]
pub struct TimestampError(pub String);

impl Timestamp {
    pub fn parse(s: &str) -> Result<Self, TimestampError> {
        if s.len() != 14 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(TimestampError(s.to_string()));
        }
        NaiveDateTime::parse_from_str(s, FORMAT)
            .map(Timestamp)
            .map_err(|_| TimestampError(s.to_string()))
    }

    pub fn from_datetime(dt: DateTime<Utc>) -> Self {
        Timestamp(dt.naive_utc().with_nanosecond_zero())
    }

    pub fn from_unix(secs: i64) -> Option<Self> {
        DateTime::from_timestamp(secs, 0).map(Self::from_datetime)
    }

    pub fn naive(&self) -> NaiveDateTime {
        self.0
    }

    pub fn date(&self) -> NaiveDate {
        self.0.date()
    }

    pub fn to_utc(&self) -> DateTime<Utc> {
        self.0.and_utc()
    }

    /// Earliest instant of a calendar day.
    pub fn start_of_day(date: NaiveDate) -> Self {
        Timestamp(date.and_hms_opt(0, 0, 0).expect("midnight exists"))
    }

    /// Last second of a calendar day.
    pub fn end_of_day(date: NaiveDate) -> Self {
        Timestamp(date.and_hms_opt(23, 59, 59).expect("23:59:59 exists"))
    }
}

trait NanoZero {
    fn with_nanosecond_zero(self) -> Self;
}

impl NanoZero for NaiveDateTime {
    fn with_nanosecond_zero(self) -> Self {
        use chrono::Timelike;
        self.with_nanosecond(0).unwrap_or(self)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format(FORMAT))
    }
}

impl FromStr for Timestamp {
    type Err = TimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse(s)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Timestamp::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Time source for rate limiting, backoff and fetch stamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
    /// Monotonic reading used for spacing requests.
    fn elapsed(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: std::time::Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        SystemClock {
            origin: std::time::Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn elapsed(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }
}

/// Clock that only advances when slept on. Records total slept time.
#[derive(Debug)]
pub struct FakeClock {
    start: DateTime<Utc>,
    state: Mutex<FakeState>,
}

#[derive(Debug, Default)]
struct FakeState {
    offset: Duration,
    slept: Duration,
    sleeps: u64,
}

impl FakeClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        FakeClock {
            start,
            state: Mutex::new(FakeState::default()),
        }
    }

    /// Advance without counting as sleep (time spent "doing work").
    pub fn advance(&self, d: Duration) {
        self.state.lock().unwrap().offset += d;
    }

    pub fn total_slept(&self) -> Duration {
        self.state.lock().unwrap().slept
    }

    pub fn sleep_calls(&self) -> u64 {
        self.state.lock().unwrap().sleeps
    }
}

impl Default for FakeClock {
    fn default() -> Self {
        FakeClock::new(DateTime::from_timestamp(1_690_000_000, 0).expect("valid"))
    }
}

impl Clock for FakeClock {
    fn now(&self) -> DateTime<Utc> {
        let offset = self.state.lock().unwrap().offset;
        self.start + chrono::Duration::from_std(offset).expect("offset in range")
    }

    fn elapsed(&self) -> Duration {
        self.state.lock().unwrap().offset
    }

    fn sleep(&self, d: Duration) {
        let mut st = self.state.lock().unwrap();
        st.offset += d;
        st.slept += d;
        st.sleeps += 1;
    }
}

/// RFC 3339 rendering with second precision and a `Z` suffix.
pub fn iso_utc(dt: DateTime<Utc>) -> String {
    dt.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_renders() {
        let ts = Timestamp::parse("20170214033011").unwrap();
        assert_eq!(ts.to_string(), "20170214033011");
        assert_eq!(ts.date(), NaiveDate::from_ymd_opt(2017, 2, 14).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        for bad in ["", "2017", "2017021403301a", "20171314033011", "201702140330111", "20170230000000"] {
            assert!(Timestamp::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn unix_round_trip() {
        let ts = Timestamp::from_unix(1485974340).unwrap();
        assert_eq!(ts.to_string(), "20170201183900");
        assert_eq!(iso_utc(ts.to_utc()), "2017-02-01T18:39:00Z");
    }

    #[test]
    fn fake_clock_counts_sleep() {
        let clock = FakeClock::default();
        clock.sleep(Duration::from_secs(2));
        clock.advance(Duration::from_secs(1));
        assert_eq!(clock.elapsed(), Duration::from_secs(3));
        assert_eq!(clock.total_slept(), Duration::from_secs(2));
    }
}
