//! CSV and JSON renderings of every report, with matching readers.

use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use csv::{QuoteStyle, ReaderBuilder, WriterBuilder};
use serde::{Deserialize, Serialize};

use crate::cdx_client::{CdxRecord, CdxStatus};
use crate::classifier::{Classification, MementoClass, ResolvedVia};
use crate::probe::{Archived, LiveStatus, ProbeVerdict};
use crate::replayability::{OnsetReport, Period, ReplayabilityStats, TimeBucket};
use crate::time::Timestamp;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Storage(#[from] crate::cdx_client::StorageError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
}

pub const CLASSIFIED_HEADER: [&str; 11] = [
    "endpoint",
    "timestamp",
    "original",
    "status",
    "class",
    "final_uri",
    "hops",
    "resolved_via",
    "mimetype",
    "digest",
    "note",
];

pub const SERIES_HEADER: [&str; 11] = [
    "period",
    "n_success",
    "n_revisit",
    "n_revisit_success",
    "n_login_redirect",
    "n_client_error",
    "n_server_error",
    "excluded_redirects",
    "pct_replayable",
    "n_revisit_excluded_redirect",
    "denominator",
];

pub const VERDICT_HEADER: [&str; 9] = [
    "url",
    "archived",
    "first_memento",
    "last_memento",
    "live_status",
    "checked_at",
    "memento_count",
    "archive_note",
    "live_note",
];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().quote_style(QuoteStyle::NonNumeric).from_writer(w)
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    ReaderBuilder::new().has_headers(true).from_reader(r)
}

fn malformed(row: usize, reason: impl Into<String>) -> ReportError {
    ReportError::Malformed {
        row,
        reason: reason.into(),
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn nonempty(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

fn check_header(rdr: &mut csv::Reader<impl Read>, want: &[&str]) -> Result<(), ReportError> {
    let got = rdr.headers()?;
    if got.iter().ne(want.iter().copied()) {
        return Err(malformed(0, format!("unexpected header {got:?}")));
    }
    Ok(())
}

/// RFC 3339 with a Z suffix; fractional seconds only when present.
pub fn instant(dt: &DateTime<Utc>) -> String {
    dt.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_instant(row: usize, s: &str) -> Result<DateTime<Utc>, ReportError> {
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc))
        .map_err(|e| malformed(row, format!("bad instant {s:?}: {e}")))
}

pub fn write_classified<W: Write>(w: W, rows: &[Classification]) -> Result<(), ReportError> {
    let mut out = writer(w);
    out.write_record(CLASSIFIED_HEADER)?;
    for c in rows {
        let r = &c.record;
        out.write_record([
            r.endpoint_name.as_str(),
            &r.timestamp.to_string(),
            &r.original,
            r.statuscode.as_str(),
            &c.class.to_string(),
            c.class.final_uri().unwrap_or(""),
            &opt(&c.hops),
            &c.resolved_via.to_string(),
            &r.mimetype,
            r.digest.as_deref().unwrap_or(""),
            c.note.as_deref().unwrap_or(""),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_classified<R: Read>(r: R) -> Result<Vec<Classification>, ReportError> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &CLASSIFIED_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let timestamp = Timestamp::parse(f(1)).map_err(|e| malformed(row, e.to_string()))?;
        let statuscode = CdxStatus::parse(f(3)).ok_or_else(|| malformed(row, format!("bad status {:?}", f(3))))?;
        let final_uri = nonempty(f(5));
        let class = MementoClass::from_label(f(4), final_uri.as_deref()).map_err(|e| malformed(row, e.to_string()))?;
        let hops = match f(6) {
            "" => None,
            s => Some(s.parse().map_err(|_| malformed(row, format!("bad hops {s:?}")))?),
        };
        let resolved_via: ResolvedVia = f(7).parse().map_err(|e: crate::classifier::LabelError| malformed(row, e.to_string()))?;
        out.push(Classification {
            record: CdxRecord {
                timestamp,
                original: f(2).to_string(),
                mimetype: f(8).to_string(),
                statuscode,
                digest: nonempty(f(9)),
                endpoint_name: f(0).to_string(),
            },
            class,
            hops,
            resolved_via,
            note: nonempty(f(10)),
        });
    }
    Ok(out)
}

/// `100·num/den` rounded half-up to two decimals, computed exactly.
pub fn format_pct(stats: &ReplayabilityStats) -> String {
    let (num, den) = (stats.numerator() as u128, stats.denominator() as u128);
    if den == 0 {
        return String::new();
    }
    let scaled = num * 10_000;
    let mut q = scaled / den;
    if 2 * (scaled % den) >= den {
        q += 1;
    }
    format!("{}.{:02}", q / 100, q % 100)
}

pub fn write_series_csv<W: Write>(w: W, buckets: &[TimeBucket]) -> Result<(), ReportError> {
    let mut out = writer(w);
    out.write_record(SERIES_HEADER)?;
    for b in buckets {
        let s = &b.stats;
        out.write_record([
            b.period.to_string(),
            s.n_success.to_string(),
            s.n_revisit.to_string(),
            s.n_revisit_success.to_string(),
            s.n_login_redirect.to_string(),
            s.n_client_error.to_string(),
            s.n_server_error.to_string(),
            s.excluded_redirects.to_string(),
            format_pct(s),
            s.n_revisit_excluded_redirect.to_string(),
            s.denominator().to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_series_csv<R: Read>(r: R) -> Result<Vec<TimeBucket>, ReportError> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &SERIES_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let n = |k: usize| -> Result<u64, ReportError> {
            let s = rec.get(k).unwrap_or("");
            s.parse().map_err(|_| malformed(row, format!("bad count {s:?} in column {}", SERIES_HEADER[k])))
        };
        let period: Period = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|e: String| malformed(row, e))?;
        let stats = ReplayabilityStats {
            n_success: n(1)?,
            n_revisit: n(2)?,
            n_revisit_success: n(3)?,
            n_login_redirect: n(4)?,
            n_client_error: n(5)?,
            n_server_error: n(6)?,
            excluded_redirects: n(7)?,
            n_revisit_excluded_redirect: n(9)?,
        };
        if rec.get(8).unwrap_or("") != format_pct(&stats) {
            return Err(malformed(row, "pct_replayable disagrees with the counts"));
        }
        out.push(TimeBucket { period, stats });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SeriesJsonRow {
    period: Period,
    #[serde(flatten)]
    stats: ReplayabilityStats,
    pct_replayable: Option<f64>,
}

pub fn write_series_json<W: Write>(mut w: W, buckets: &[TimeBucket]) -> Result<(), ReportError> {
    let rows: Vec<SeriesJsonRow> = buckets
        .iter()
        .map(|b| SeriesJsonRow {
            period: b.period,
            stats: b.stats,
            pct_replayable: b.percentage(),
        })
        .collect();
    serde_json::to_writer_pretty(&mut w, &rows)?;
    w.write_all(b"\n").map_err(serde_json::Error::io)?;
    Ok(())
}

pub fn read_series_json<R: Read>(r: R) -> Result<Vec<TimeBucket>, ReportError> {
    let rows: Vec<SeriesJsonRow> = serde_json::from_reader(r)?;
    Ok(rows
        .into_iter()
        .map(|r| TimeBucket {
            period: r.period,
            stats: r.stats,
        })
        .collect())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<(), ReportError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(serde_json::Error::io)?;
    Ok(())
}

pub fn write_onset<W: Write>(w: W, report: &OnsetReport) -> Result<(), ReportError> {
    write_json(w, report)
}

pub fn read_onset<R: Read>(r: R) -> Result<OnsetReport, ReportError> {
    Ok(serde_json::from_reader(r)?)
}

pub fn write_verdicts<W: Write>(w: W, verdicts: &[ProbeVerdict]) -> Result<(), ReportError> {
    let mut out = writer(w);
    out.write_record(VERDICT_HEADER)?;
    for v in verdicts {
        let (first, last, count, archive_note) = match &v.archived {
            Archived::Yes { count, first, last } => (first.to_string(), last.to_string(), count.to_string(), String::new()),
            Archived::No => (String::new(), String::new(), "0".into(), String::new()),
            Archived::Indeterminate { reason } => (String::new(), String::new(), String::new(), reason.clone()),
        };
        let (live, live_note) = match &v.live_status {
            LiveStatus::NotChecked => (String::new(), String::new()),
            LiveStatus::Status { code } => (code.to_string(), String::new()),
            LiveStatus::Unreachable { reason } => ("unreachable".into(), reason.clone()),
        };
        out.write_record([
            v.url.clone(),
            v.archived.label().to_string(),
            first,
            last,
            live,
            instant(&v.checked_at),
            count,
            archive_note,
            live_note,
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_verdicts<R: Read>(r: R) -> Result<Vec<ProbeVerdict>, ReportError> {
    let mut rdr = reader(r);
    check_header(&mut rdr, &VERDICT_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let f = |k: usize| rec.get(k).unwrap_or("");
        let ts = |s: &str| Timestamp::parse(s).map_err(|e| malformed(row, e.to_string()));
        let archived = match f(1) {
            "true" => Archived::Yes {
                count: f(6).parse().map_err(|_| malformed(row, "bad memento_count"))?,
                first: ts(f(2))?,
                last: ts(f(3))?,
            },
            "false" => Archived::No,
            "indeterminate" => Archived::Indeterminate { reason: f(7).to_string() },
            other => return Err(malformed(row, format!("bad archived value {other:?}"))),
        };
        let live_status = match f(4) {
            "" => LiveStatus::NotChecked,
            "unreachable" => LiveStatus::Unreachable { reason: f(8).to_string() },
            s => LiveStatus::Status {
                code: s.parse().map_err(|_| malformed(row, format!("bad live_status {s:?}")))?,
            },
        };
        out.push(ProbeVerdict {
            url: f(0).to_string(),
            archived,
            live_status,
            checked_at: parse_instant(row, f(5))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replayability::Granularity;

    fn stats(s: u64, login: u64) -> ReplayabilityStats {
        ReplayabilityStats {
            n_success: s,
            n_login_redirect: login,
            ..Default::default()
        }
    }

    #[test]
    fn pct_rounds_half_up_exactly() {
        assert_eq!(format_pct(&stats(1, 2)), "33.33");
        assert_eq!(format_pct(&stats(2, 1)), "66.67");
        assert_eq!(format_pct(&stats(1, 7)), "12.50");
        assert_eq!(format_pct(&stats(1, 0)), "100.00");
        assert_eq!(format_pct(&stats(0, 0)), "");
    }

    #[test]
    fn undefined_bucket_is_empty_cell_and_null() {
        let ts = Timestamp::parse("20190801000000").unwrap();
        let buckets = vec![TimeBucket {
            period: Period::containing(&ts, Granularity::Month),
            stats: ReplayabilityStats {
                excluded_redirects: 3,
                ..Default::default()
            },
        }];
        let mut csv = Vec::new();
        write_series_csv(&mut csv, &buckets).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "\"2019-08\",0,0,0,0,0,0,3,\"\",0,0");
        let mut json = Vec::new();
        write_series_json(&mut json, &buckets).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert!(v[0]["pct_replayable"].is_null());
        assert_eq!(read_series_csv(text.as_bytes()).unwrap(), buckets);
        assert_eq!(read_series_json(json.as_slice()).unwrap(), buckets);
    }
}
