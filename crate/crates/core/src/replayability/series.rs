use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::stats::{percentage_replayable, ReplayabilityStats};
use crate::classifier::Classification;
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Day,
    #[default]
    Month,
    Year,
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "day" | "daily" => Ok(Granularity::Day),
            "month" | "monthly" => Ok(Granularity::Month),
            "year" | "yearly" => Ok(Granularity::Year),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

/// A UTC calendar day, month or year, identified by its first day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Period {
    start: NaiveDate,
    granularity: Granularity,
}

impl Period {
    pub fn containing(ts: &Timestamp, granularity: Granularity) -> Self {
        let d = ts.date();
        let start = match granularity {
            Granularity::Day => d,
            Granularity::Month => NaiveDate::from_ymd_opt(d.year(), d.month(), 1).expect("valid"),
            Granularity::Year => NaiveDate::from_ymd_opt(d.year(), 1, 1).expect("valid"),
        };
        Period { start, granularity }
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn year(&self) -> i32 {
        self.start.year()
    }

    pub fn month(&self) -> u32 {
        self.start.month()
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.granularity {
            Granularity::Day => write!(f, "{}", self.start.format("%Y-%m-%d")),
            Granularity::Month => write!(f, "{}", self.start.format("%Y-%m")),
            Granularity::Year => write!(f, "{}", self.start.format("%Y")),
        }
    }
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid period {s:?}");
        let parts: Vec<&str> = s.split('-').collect();
        let num = |p: &str| p.parse::<u32>().map_err(|_| bad());
        let (start, granularity) = match parts.as_slice() {
            [y] if y.len() == 4 => (NaiveDate::from_ymd_opt(num(y)? as i32, 1, 1), Granularity::Year),
            [y, m] if y.len() == 4 && m.len() == 2 => {
                (NaiveDate::from_ymd_opt(num(y)? as i32, num(m)?, 1), Granularity::Month)
            }
            [y, m, d] if y.len() == 4 && m.len() == 2 && d.len() == 2 => {
                (NaiveDate::from_ymd_opt(num(y)? as i32, num(m)?, num(d)?), Granularity::Day)
            }
            _ => return Err(bad()),
        };
        Ok(Period {
            start: start.ok_or_else(bad)?,
            granularity,
        })
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBucket {
    pub period: Period,
    pub stats: ReplayabilityStats,
}

impl TimeBucket {
    pub fn percentage(&self) -> Option<f64> {
        percentage_replayable(&self.stats)
    }
}

/// Count every classified record into the period holding its timestamp.
/// Buckets come back sorted and disjoint; periods without records are absent.
pub fn bucketize<'a>(
    records: impl IntoIterator<Item = &'a Classification>,
    granularity: Granularity,
) -> Vec<TimeBucket> {
    let mut map: BTreeMap<Period, ReplayabilityStats> = BTreeMap::new();
    for c in records {
        map.entry(Period::containing(&c.record.timestamp, granularity))
            .or_default()
            .record(&c.class);
    }
    map.into_iter()
        .map(|(period, stats)| TimeBucket { period, stats })
        .collect()
}

/// Merge several series (one per account) into one. Order-independent.
pub fn merge_series(series: impl IntoIterator<Item = Vec<TimeBucket>>) -> Vec<TimeBucket> {
    let mut map: BTreeMap<Period, ReplayabilityStats> = BTreeMap::new();
    for buckets in series {
        for b in buckets {
            *map.entry(b.period).or_default() += b.stats;
        }
    }
    map.into_iter()
        .map(|(period, stats)| TimeBucket { period, stats })
        .collect()
}

/// Plot-ready point; `pct` is `None` for undefined buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub period: Period,
    pub pct: Option<f64>,
}

pub fn plot_points(buckets: &[TimeBucket]) -> Vec<PlotPoint> {
    buckets
        .iter()
        .map(|b| PlotPoint {
            period: b.period,
            pct: b.percentage(),
        })
        .collect()
}
