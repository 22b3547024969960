use std::fmt;
use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};

use super::endpoint::{ArchiveEndpoint, CdxOutput};
use crate::time::Timestamp;

/// The CDX status column: digits, or `-` for revisit records.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct CdxStatus(String);

impl CdxStatus {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s == "-" || (!s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())) {
            Some(CdxStatus(s.to_string()))
        } else {
            None
        }
    }

    pub fn is_dash(&self) -> bool {
        self.0 == "-"
    }

    pub fn code(&self) -> Option<u16> {
        self.0.parse().ok()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for CdxStatus {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        CdxStatus::parse(&s).ok_or_else(|| format!("invalid CDX status {s:?}"))
    }
}

impl From<CdxStatus> for String {
    fn from(s: CdxStatus) -> String {
        s.0
    }
}

impl fmt::Display for CdxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One capture row from a CDX index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CdxRecord {
    pub timestamp: Timestamp,
    pub original: String,
    pub mimetype: String,
    pub statuscode: CdxStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    pub endpoint_name: String,
}

impl CdxRecord {
    pub fn is_revisit(&self) -> bool {
        self.statuscode.is_dash() || self.mimetype.eq_ignore_ascii_case("warc/revisit")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchScope {
    /// Captures of exactly this URL (scheme and `www.` variants collapse
    /// server-side through the SURT key). Prefix matching is not offered.
    #[default]
    Exact,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("empty target")]
    EmptyTarget,
    #[error("target scheme must be http or https: {0}")]
    BadScheme(String),
    #[error("from bound {from} is after to bound {to}")]
    InvertedBounds { from: Timestamp, to: Timestamp },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdxQuery {
    pub endpoint: ArchiveEndpoint,
    pub target: String,
    /// Inclusive lower bound.
    pub from: Option<Timestamp>,
    /// Inclusive upper bound.
    pub to: Option<Timestamp>,
    pub match_scope: MatchScope,
    /// Rows per page when paging through resume keys.
    pub page_limit: Option<NonZeroU32>,
}

impl CdxQuery {
    pub fn new(endpoint: ArchiveEndpoint, target: impl Into<String>) -> Self {
        CdxQuery {
            endpoint,
            target: target.into(),
            from: None,
            to: None,
            match_scope: MatchScope::Exact,
            page_limit: None,
        }
    }

    pub fn from(mut self, ts: Timestamp) -> Self {
        self.from = Some(ts);
        self
    }

    pub fn to(mut self, ts: Timestamp) -> Self {
        self.to = Some(ts);
        self
    }

    pub fn bounds(mut self, from: Option<Timestamp>, to: Option<Timestamp>) -> Self {
        self.from = from;
        self.to = to;
        self
    }

    pub fn page_limit(mut self, rows: u32) -> Self {
        self.page_limit = NonZeroU32::new(rows);
        self
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        let target = self.target.trim();
        if target.is_empty() {
            return Err(QueryError::EmptyTarget);
        }
        if let Some(idx) = target.find("://") {
            let scheme = target[..idx].to_ascii_lowercase();
            if scheme != "http" && scheme != "https" {
                return Err(QueryError::BadScheme(target.to_string()));
            }
        }
        if let (Some(from), Some(to)) = (self.from, self.to) {
            if from > to {
                return Err(QueryError::InvertedBounds { from, to });
            }
        }
        Ok(())
    }

    pub fn contains(&self, ts: &Timestamp) -> bool {
        self.from.is_none_or(|f| *ts >= f) && self.to.is_none_or(|t| *ts <= t)
    }

    /// Request URL for one page. `resume_key` continues a paged listing.
    pub fn request_url(&self, resume_key: Option<&str>) -> String {
        let mut url = url::Url::parse(&self.endpoint.cdx_base).expect("validated endpoint base");
        {
            let mut q = url.query_pairs_mut();
            q.append_pair("url", self.target.trim());
            if self.endpoint.output != CdxOutput::Text {
                q.append_pair("output", "json");
            }
            if let Some(from) = self.from {
                q.append_pair("from", &from.to_string());
            }
            if let Some(to) = self.to {
                q.append_pair("to", &to.to_string());
            }
            if let Some(limit) = self.page_limit {
                q.append_pair("limit", &limit.to_string());
                if self.endpoint.supports_resume_key {
                    q.append_pair("showResumeKey", "true");
                }
            }
            if let Some(key) = resume_key {
                q.append_pair("resumeKey", key);
            }
        }
        url.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    #[test]
    fn status_shapes() {
        assert!(CdxStatus::parse("200").is_some());
        assert!(CdxStatus::parse("-").unwrap().is_dash());
        assert!(CdxStatus::parse("2x0").is_none());
        assert!(CdxStatus::parse("").is_none());
        assert!(CdxStatus::parse("--").is_none());
    }

    #[test]
    fn query_validation() {
        let ep = ArchiveEndpoint::wayback();
        assert_eq!(CdxQuery::new(ep.clone(), " ").validate(), Err(QueryError::EmptyTarget));
        assert!(matches!(
            CdxQuery::new(ep.clone(), "ftp://instagram.com/x").validate(),
            Err(QueryError::BadScheme(_))
        ));
        assert!(CdxQuery::new(ep.clone(), "instagram.com/x").validate().is_ok());
        assert!(CdxQuery::new(ep.clone(), "https://instagram.com/x").validate().is_ok());
        let inverted = CdxQuery::new(ep, "instagram.com/x")
            .from(ts("20200101000000"))
            .to(ts("20190101000000"));
        assert!(matches!(inverted.validate(), Err(QueryError::InvertedBounds { .. })));
    }

    #[test]
    fn bounds_are_inclusive() {
        let q = CdxQuery::new(ArchiveEndpoint::wayback(), "x")
            .from(ts("20190801000000"))
            .to(ts("20190831235959"));
        assert!(q.contains(&ts("20190801000000")));
        assert!(q.contains(&ts("20190831235959")));
        assert!(!q.contains(&ts("20190901000000")));
    }

    #[test]
    fn request_url_params() {
        let q = CdxQuery::new(ArchiveEndpoint::wayback(), "instagram.com/katyperry/")
            .from(ts("20190801000000"))
            .page_limit(50);
        let url = q.request_url(Some("abc"));
        assert!(url.starts_with("https://web.archive.org/cdx/search/cdx?url=instagram.com%2Fkatyperry%2F&output=json"));
        assert!(url.contains("from=20190801000000"));
        assert!(url.contains("limit=50&showResumeKey=true&resumeKey=abc"));
    }
}
