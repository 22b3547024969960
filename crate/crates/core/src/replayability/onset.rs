use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::cdx_client::{ArchiveEndpoint, CdxClient, CdxError, CdxQuery, CdxRecord};
use crate::classifier::Classification;
use crate::time::Timestamp;

/// The login page URL whose own captures are counted.
pub const LOGIN_PAGE_TARGET: &str = "www.instagram.com/accounts/login";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayCount {
    pub date: NaiveDate,
    pub count: u64,
}

/// Count records per UTC day over `from..=to`, zero-filled.
pub fn daily_counts(records: &[CdxRecord], from: NaiveDate, to: NaiveDate) -> Vec<DayCount> {
    if from > to {
        return Vec::new();
    }
    let mut counts: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for r in records {
        let d = r.timestamp.date();
        if d >= from && d <= to {
            *counts.entry(d).or_default() += 1;
        }
    }
    from.iter_days()
        .take_while(|d| *d <= to)
        .map(|date| DayCount {
            date,
            count: counts.get(&date).copied().unwrap_or(0),
        })
        .collect()
}

/// Daily capture counts of the login page itself.
pub fn login_page_series(
    client: &CdxClient,
    endpoint: &ArchiveEndpoint,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<Vec<DayCount>, CdxError> {
    if from > to {
        return Ok(Vec::new());
    }
    let query = CdxQuery::new(endpoint.clone(), LOGIN_PAGE_TARGET)
        .from(Timestamp::start_of_day(from))
        .to(Timestamp::end_of_day(to));
    let records = client.fetch_cdx(&query)?;
    Ok(daily_counts(&records, from, to))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstLoginRedirect {
    pub handle: String,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyJump {
    pub date_from: NaiveDate,
    pub date_to: NaiveDate,
    pub count_from: u64,
    pub count_to: u64,
}

impl DailyJump {
    pub fn increase(&self) -> i64 {
        self.count_to as i64 - self.count_from as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnsetReport {
    pub first_login_redirect: Option<FirstLoginRedirect>,
    pub max_daily_jump: Option<DailyJump>,
    pub series: Vec<DayCount>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OnsetError {
    #[error("no classified records and no login series")]
    EmptyInput,
    #[error("no login-wall redirects in the classified records")]
    NoLoginRedirects { report: Box<OnsetReport> },
}

/// Largest day-over-day increase between consecutive days. Ties keep the
/// earliest pair.
pub fn max_daily_jump(series: &[DayCount]) -> Option<DailyJump> {
    let mut best: Option<DailyJump> = None;
    for pair in series.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.date.succ_opt() != Some(b.date) {
            continue;
        }
        let jump = DailyJump {
            date_from: a.date,
            date_to: b.date,
            count_from: a.count,
            count_to: b.count,
        };
        if best.is_none_or(|cur| jump.increase() > cur.increase()) {
            best = Some(jump);
        }
    }
    best
}

/// Earliest login-wall redirect across accounts, plus the login series jump.
pub fn detect_onset(
    accounts: &[(String, Vec<Classification>)],
    login_series: &[DayCount],
) -> Result<OnsetReport, OnsetError> {
    if accounts.iter().all(|(_, c)| c.is_empty()) && login_series.is_empty() {
        return Err(OnsetError::EmptyInput);
    }
    let first_login_redirect = accounts
        .iter()
        .flat_map(|(handle, cs)| cs.iter().map(move |c| (handle, c)))
        .filter(|(_, c)| c.class.is_login_redirect())
        .min_by(|(ha, a), (hb, b)| a.record.timestamp.cmp(&b.record.timestamp).then(ha.cmp(hb)))
        .map(|(handle, c)| FirstLoginRedirect {
            handle: handle.clone(),
            timestamp: c.record.timestamp,
        });
    let report = OnsetReport {
        first_login_redirect,
        max_daily_jump: max_daily_jump(login_series),
        series: login_series.to_vec(),
    };
    if report.first_login_redirect.is_none() {
        return Err(OnsetError::NoLoginRedirects {
            report: Box::new(report),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(counts: &[u64]) -> Vec<DayCount> {
        let start = NaiveDate::from_ymd_opt(2019, 8, 1).unwrap();
        counts
            .iter()
            .enumerate()
            .map(|(i, &count)| DayCount {
                date: start + chrono::Duration::days(i as i64),
                count,
            })
            .collect()
    }

    /// Exhaustive pairwise scan used as the reference.
    fn brute_force_jump(s: &[DayCount]) -> Option<(usize, usize)> {
        let mut best: Option<(i64, usize)> = None;
        for i in 0..s.len().saturating_sub(1) {
            for j in i + 1..s.len() {
                if s[j].date - s[i].date != chrono::Duration::days(1) {
                    continue;
                }
                let d = s[j].count as i64 - s[i].count as i64;
                if best.is_none_or(|(b, _)| d > b) {
                    best = Some((d, i));
                }
            }
        }
        best.map(|(_, i)| (i, i + 1))
    }

    #[test]
    fn jump_in_small_series() {
        let s = series(&[1, 1, 50, 51]);
        let j = max_daily_jump(&s).unwrap();
        assert_eq!((j.date_from, j.date_to), (s[1].date, s[2].date));
        assert_eq!(brute_force_jump(&s), Some((1, 2)));
    }

    #[test]
    fn jump_matches_brute_force() {
        let mut state = 12345u64;
        for _ in 0..200 {
            let n = (state % 40) as usize + 2;
            let counts: Vec<u64> = (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 33) % 100
                })
                .collect();
            let s = series(&counts);
            let j = max_daily_jump(&s).unwrap();
            let (i, k) = brute_force_jump(&s).unwrap();
            assert_eq!((j.date_from, j.date_to), (s[i].date, s[k].date));
        }
    }

    #[test]
    fn zero_fill_and_empty_range() {
        let from = NaiveDate::from_ymd_opt(2019, 8, 20).unwrap();
        let to = NaiveDate::from_ymd_opt(2019, 8, 22).unwrap();
        let rec = |ts: &str| CdxRecord {
            timestamp: Timestamp::parse(ts).unwrap(),
            original: "https://www.instagram.com/accounts/login/".into(),
            mimetype: "text/html".into(),
            statuscode: crate::cdx_client::CdxStatus::parse("200").unwrap(),
            digest: None,
            endpoint_name: "wayback".into(),
        };
        let recs = [rec("20190821010000"), rec("20190821020000"), rec("20190821230000")];
        let s = daily_counts(&recs, from, to);
        assert_eq!(s.iter().map(|d| d.count).collect::<Vec<_>>(), vec![0, 3, 0]);
        assert!(daily_counts(&recs, to, from).is_empty());
    }

    #[test]
    fn no_login_redirects_reports_none() {
        let err = detect_onset(&[("nike".into(), vec![])], &series(&[1, 2])).unwrap_err();
        match err {
            OnsetError::NoLoginRedirects { report } => assert!(report.first_login_redirect.is_none()),
            other => panic!("{other:?}"),
        }
        assert_eq!(detect_onset(&[], &[]), Err(OnsetError::EmptyInput));
    }
}
