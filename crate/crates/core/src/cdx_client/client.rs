use std::sync::Arc;

use chrono::{DateTime, Utc};

use super::fetcher::{CachePolicy, FetchError, Fetcher};
use super::parse::{parse_cdx_body, MalformedRow};
use super::record::{CdxQuery, CdxRecord, QueryError};
use super::cache::StorageError;

#[derive(Debug, thiserror::Error)]
pub enum CdxError {
    #[error("invalid query: {0}")]
    InvalidQuery(#[from] QueryError),
    #[error("network error for {url}: {reason}")]
    Network { url: String, reason: String },
    #[error("rate limited by {url} past the retry budget")]
    RateLimited { url: String },
    #[error("CDX server answered {status} for {url}")]
    HttpStatus { url: String, status: u16 },
    #[error("malformed CDX response from {url}: {row}")]
    MalformedResponse {
        url: String,
        #[source]
        row: MalformedRow,
    },
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("pagination did not terminate after {0} pages")]
    Pagination(usize),
}

impl From<FetchError> for CdxError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::Network { url, reason } => CdxError::Network { url, reason },
            FetchError::RateLimited { url, .. } => CdxError::RateLimited { url },
            FetchError::Storage(s) => CdxError::Storage(s),
            FetchError::HopLimitExceeded { start, .. } => CdxError::Network {
                url: start,
                reason: "redirect loop".into(),
            },
        }
    }
}

const MAX_PAGES: usize = 10_000;

#[derive(Clone)]
pub struct CdxClient {
    fetcher: Arc<Fetcher>,
}

impl CdxClient {
    pub fn new(fetcher: Arc<Fetcher>) -> Self {
        CdxClient { fetcher }
    }

    pub fn fetcher(&self) -> &Arc<Fetcher> {
        &self.fetcher
    }

    /// All captures for the query, ascending by timestamp.
    pub fn fetch_cdx(&self, query: &CdxQuery) -> Result<Vec<CdxRecord>, CdxError> {
        self.fetch_cdx_stamped(query).map(|(records, _)| records)
    }

    /// Like [`fetch_cdx`](Self::fetch_cdx), plus when the newest page was
    /// fetched (the cached time on a warm run).
    pub fn fetch_cdx_stamped(&self, query: &CdxQuery) -> Result<(Vec<CdxRecord>, DateTime<Utc>), CdxError> {
        query.validate()?;
        let mut records = Vec::new();
        let mut stamp: Option<DateTime<Utc>> = None;
        let mut resume: Option<String> = None;
        for _ in 0..MAX_PAGES {
            let url = query.request_url(resume.as_deref());
            let fetched = self.fetcher.get(&url, CachePolicy::Use)?;
            stamp = stamp.max(Some(fetched.fetched_at));
            let status = fetched.response.status;
            if !(200..300).contains(&status) {
                return Err(CdxError::HttpStatus { url, status });
            }
            let body = String::from_utf8_lossy(&fetched.response.body);
            let page = parse_cdx_body(&body, &query.endpoint)
                .map_err(|row| CdxError::MalformedResponse { url: url.clone(), row })?;
            records.extend(page.records.into_iter().filter(|r| query.contains(&r.timestamp)));
            match page.resume_key {
                Some(key) if query.page_limit.is_some() && query.endpoint.supports_resume_key => {
                    resume = Some(key)
                }
                _ => {
                    records.sort_by_key(|r| r.timestamp);
                    return Ok((records, stamp.expect("at least one page fetched")));
                }
            }
        }
        Err(CdxError::Pagination(MAX_PAGES))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdx_client::endpoint::ArchiveEndpoint;
    use crate::time::{FakeClock, Timestamp};
    use crate::transport::{HttpResponse, ReplayTransport};

    fn client(t: ReplayTransport) -> CdxClient {
        CdxClient::new(Arc::new(
            Fetcher::builder(Arc::new(t)).clock(Arc::new(FakeClock::default())).build(),
        ))
    }

    const HEADER: &str = r#"["urlkey","timestamp","original","mimetype","statuscode","digest","length"]"#;

    fn row(ts: &str, status: &str) -> String {
        format!(r#"["com,instagram)/nike","{ts}","https://www.instagram.com/nike/","text/html","{status}","D{ts}","100"]"#)
    }

    #[test]
    fn sorts_and_filters() {
        let q = CdxQuery::new(ArchiveEndpoint::wayback(), "instagram.com/nike/");
        let body = format!("[{HEADER},{},{}]", row("20180101000000", "200"), row("20150101000000", "301"));
        let t = ReplayTransport::new().with(&q.request_url(None), HttpResponse::new(200, body));
        let recs = client(t).fetch_cdx(&q).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].timestamp < recs[1].timestamp);
    }

    #[test]
    fn empty_body_is_empty_list() {
        let q = CdxQuery::new(ArchiveEndpoint::wayback(), "instagram.com/nobody/");
        let t = ReplayTransport::new().with(&q.request_url(None), HttpResponse::new(200, ""));
        assert!(client(t).fetch_cdx(&q).unwrap().is_empty());
    }

    #[test]
    fn pages_are_concatenated() {
        let q = CdxQuery::new(ArchiveEndpoint::wayback(), "instagram.com/nike/").page_limit(1);
        let p1 = format!(r#"[{HEADER},{},[],["K1"]]"#, row("20150101000000", "200"));
        let p2 = format!(r#"[{HEADER},{},[],["K2"]]"#, row("20160101000000", "200"));
        let p3 = format!(r#"[{HEADER},{}]"#, row("20170101000000", "200"));
        let t = ReplayTransport::new()
            .with(&q.request_url(None), HttpResponse::new(200, p1))
            .with(&q.request_url(Some("K1")), HttpResponse::new(200, p2))
            .with(&q.request_url(Some("K2")), HttpResponse::new(200, p3));
        let recs = client(t).fetch_cdx(&q).unwrap();
        let stamps: Vec<String> = recs.iter().map(|r| r.timestamp.to_string()).collect();
        assert_eq!(stamps, ["20150101000000", "20160101000000", "20170101000000"]);
    }

    #[test]
    fn error_status_and_bad_rows() {
        let q = CdxQuery::new(ArchiveEndpoint::wayback(), "instagram.com/nike/");
        let t = ReplayTransport::new().with(&q.request_url(None), HttpResponse::new(400, "bad"));
        assert!(matches!(client(t).fetch_cdx(&q), Err(CdxError::HttpStatus { status: 400, .. })));

        let body = format!("[{HEADER},{}]", row("2015010100000X", "200"));
        let t = ReplayTransport::new().with(&q.request_url(None), HttpResponse::new(200, body));
        match client(t).fetch_cdx(&q) {
            Err(CdxError::MalformedResponse { row, .. }) => assert!(row.row.contains("2015010100000X")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unreachable_is_network_error() {
        let q = CdxQuery::new(ArchiveEndpoint::wayback(), "instagram.com/nike/")
            .from(Timestamp::parse("20190101000000").unwrap());
        assert!(matches!(client(ReplayTransport::new()).fetch_cdx(&q), Err(CdxError::Network { .. })));
    }
}
