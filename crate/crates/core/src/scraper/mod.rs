//! Metadata extraction from archived Instagram account pages.

pub mod era;
pub mod extract;
pub mod model;
pub mod normalize;
pub mod provenance;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::cdx_client::{ArchiveEndpoint, CachePolicy, EndpointRegistry, FetchError, Fetcher};
use crate::classifier::canonical::is_login_uri;
use crate::classifier::DEFAULT_HOP_LIMIT;
use crate::time::Timestamp;

pub use era::{DateRange, EraRegistry, PageEra, Signature};
pub use extract::extract_embedded_json;
pub use model::{Counts, ImageResource, ImageRole, MediaPost, ProfileUser, ScrapeResult};
pub use normalize::{normalize, UrlRewriter};

#[derive(Debug, thiserror::Error)]
pub enum ScrapeError {
    #[error("{urim} is not a URI-M of any configured archive")]
    NotAMemento { urim: String },
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("{urim} replayed with status {status}")]
    HttpStatus { urim: String, status: u16 },
    #[error("{urim} replays the login page")]
    LoginPageContent { urim: String },
    #[error("no extractor matched (tried: {})", attempted.join(", "))]
    UnsupportedFormat { attempted: Vec<String> },
    #[error("no embedded metadata: {reason}")]
    EmptyDocument { reason: String },
    #[error("embedded data undecodable at byte {offset}: {reason}")]
    MalformedEmbeddedData { offset: usize, reason: String },
    #[error("schema violation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },
}

/// Whether a page body is Instagram's login form rather than an account page.
pub fn is_login_page(html: &str) -> bool {
    if html.contains("\"LoginAndSignupPage\"") {
        return true;
    }
    let lower = html.to_lowercase();
    match (lower.find("<title>"), lower.find("</title>")) {
        (Some(a), Some(b)) if a < b => {
            let title = lower[a + 7..b].trim();
            title.starts_with("login") && title.contains("instagram")
        }
        _ => false,
    }
}

/// UTF-8 decode, replacing invalid sequences; returns the count of replaced bytes.
pub fn decode_lossy(body: &[u8]) -> (String, usize) {
    let mut out = String::with_capacity(body.len());
    let mut bad = 0;
    for chunk in body.utf8_chunks() {
        out.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            bad += chunk.invalid().len();
            out.push(char::REPLACEMENT_CHARACTER);
        }
    }
    (out, bad)
}

pub struct Scraper {
    fetcher: Arc<Fetcher>,
    endpoints: EndpointRegistry,
    eras: EraRegistry,
    hop_limit: u32,
    probe_workers: usize,
}

impl Scraper {
    pub fn new(fetcher: Arc<Fetcher>, endpoints: EndpointRegistry) -> Self {
        Scraper {
            fetcher,
            endpoints,
            eras: EraRegistry::builtin(),
            hop_limit: DEFAULT_HOP_LIMIT,
            probe_workers: 4,
        }
    }

    pub fn eras(mut self, eras: EraRegistry) -> Self {
        self.eras = eras;
        self
    }

    pub fn hop_limit(mut self, hops: u32) -> Self {
        self.hop_limit = hops;
        self
    }

    pub fn probe_workers(mut self, n: usize) -> Self {
        self.probe_workers = n.max(1);
        self
    }

    pub fn era_registry(&self) -> &EraRegistry {
        &self.eras
    }

    fn endpoint_for(&self, urim: &str) -> Result<&ArchiveEndpoint, ScrapeError> {
        self.endpoints.for_urim(urim).ok_or_else(|| ScrapeError::NotAMemento {
            urim: urim.to_string(),
        })
    }

    /// Fetch a memento and extract its metadata. With `probe_images` off the
    /// only request made is the page fetch itself.
    pub fn scrape(&self, urim: &str, probe_images: bool) -> Result<ScrapeResult, ScrapeError> {
        let endpoint = self.endpoint_for(urim)?;
        let followed = self.fetcher.follow(urim, self.hop_limit, CachePolicy::Use)?;
        let served = endpoint.parse_urim(&followed.final_url);
        if let Some(p) = &served {
            if is_login_uri(&p.original).unwrap_or(false) {
                return Err(ScrapeError::LoginPageContent { urim: urim.to_string() });
            }
        }
        if followed.left_host || !(200..300).contains(&followed.response.status) {
            return Err(ScrapeError::HttpStatus {
                urim: urim.to_string(),
                status: followed.response.status,
            });
        }
        let (html, replaced) = decode_lossy(&followed.response.body);
        if replaced > 0 {
            tracing::warn!(urim, replaced, "page contained invalid UTF-8");
        }
        // Resources are rewritten against the memento actually served.
        let source = served.map(|p| p.timestamp);
        let mut result = self.scrape_page(urim, source, &html, followed.fetched_at)?;
        result.replaced_bytes = replaced;
        if probe_images {
            self.probe_all(&mut result);
        }
        Ok(result)
    }

    /// Extract metadata from an already fetched page body.
    pub fn scrape_page(
        &self,
        urim: &str,
        served: Option<Timestamp>,
        html: &str,
        scraped_at: DateTime<Utc>,
    ) -> Result<ScrapeResult, ScrapeError> {
        let endpoint = self.endpoint_for(urim)?;
        let ts = served
            .or_else(|| endpoint.parse_urim(urim).map(|p| p.timestamp))
            .ok_or_else(|| ScrapeError::NotAMemento { urim: urim.to_string() })?;
        if is_login_page(html) {
            return Err(ScrapeError::LoginPageContent { urim: urim.to_string() });
        }
        let era = self.eras.detect(html, &ts)?;
        let (doc, _) = extract_embedded_json(html, &era.signature.marker)?;
        let urls = self.rewriter(endpoint, &ts);
        let (profile_user, user_media) = normalize(&doc, era, &urls)?;
        Ok(ScrapeResult {
            urim: urim.to_string(),
            scraped_at,
            era: era.id.clone(),
            profile_user,
            user_media,
            replaced_bytes: 0,
        })
    }

    pub fn rewriter(&self, endpoint: &ArchiveEndpoint, ts: &Timestamp) -> UrlRewriter {
        UrlRewriter::new(endpoint.replay_base(), endpoint.replay_prefix(ts))
    }

    /// Final status of an archived resource after archive-internal redirects.
    pub fn probe_image(&self, uri: &str) -> Result<u16, FetchError> {
        self.fetcher
            .follow(uri, self.hop_limit, CachePolicy::StatusOnly)
            .map(|f| f.response.status)
    }

    /// Probe every image of `result`; failures are noted per image.
    pub fn probe_all(&self, result: &mut ScrapeResult) {
        let mut images = result.images_mut();
        let next = AtomicUsize::new(0);
        let outcomes: Mutex<Vec<(usize, Result<u16, FetchError>)>> = Mutex::new(Vec::new());
        let uris: Vec<String> = images.iter().map(|i| i.uri.clone()).collect();
        let workers = self.probe_workers.min(uris.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(uri) = uris.get(i) else { break };
                    let r = self.probe_image(uri);
                    outcomes.lock().unwrap().push((i, r));
                });
            }
        });
        for (i, r) in outcomes.into_inner().unwrap() {
            match r {
                Ok(status) => {
                    images[i].status_code = Some(status);
                    images[i].probe_error = None;
                }
                Err(e) => {
                    images[i].status_code = None;
                    images[i].probe_error = Some(e.to_string());
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShortcodeSighting {
    pub first_seen: Timestamp,
    pub short_code: String,
}

/// Every shortcode across `results`, tagged with the earliest memento that
/// shows it; ordered by first sighting.
pub fn collect_shortcodes(results: &[ScrapeResult]) -> Vec<ShortcodeSighting> {
    let mut seen: BTreeMap<&str, Timestamp> = BTreeMap::new();
    for r in results {
        let ts = r
            .memento_timestamp()
            .unwrap_or_else(|| Timestamp::from_datetime(r.scraped_at));
        for post in &r.user_media {
            seen.entry(&post.short_code)
                .and_modify(|t| *t = (*t).min(ts))
                .or_insert(ts);
        }
    }
    let mut out: Vec<ShortcodeSighting> = seen
        .into_iter()
        .map(|(code, first_seen)| ShortcodeSighting {
            first_seen,
            short_code: code.to_string(),
        })
        .collect();
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendMetric {
    FollowedBy,
    Media,
    Follows,
}

impl std::str::FromStr for TrendMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "followed_by" => Ok(TrendMetric::FollowedBy),
            "media" => Ok(TrendMetric::Media),
            "follows" => Ok(TrendMetric::Follows),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub timestamp: Timestamp,
    /// None where the page did not expose the metric.
    pub value: Option<u64>,
}

/// One point per result, in memento order.
pub fn trend_series(results: &[ScrapeResult], metric: TrendMetric) -> Vec<TrendPoint> {
    let mut points: Vec<TrendPoint> = results
        .iter()
        .map(|r| {
            let c = &r.profile_user.count;
            TrendPoint {
                timestamp: r
                    .memento_timestamp()
                    .unwrap_or_else(|| Timestamp::from_datetime(r.scraped_at)),
                value: match metric {
                    TrendMetric::FollowedBy => c.followed_by,
                    TrendMetric::Media => c.media,
                    TrendMetric::Follows => c.follows,
                },
            }
        })
        .collect();
    points.sort_by_key(|p| p.timestamp);
    points
}
