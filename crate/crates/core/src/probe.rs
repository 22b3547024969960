//! Archived / still-live checks for URLs pulled out of scrape results.

use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::cdx_client::{ArchiveEndpoint, CachePolicy, CdxClient, CdxQuery, Fetcher};
use crate::time::Timestamp;

/// Whether an archive holds a 2xx capture of a URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Archived {
    Yes {
        count: u64,
        first: Timestamp,
        last: Timestamp,
    },
    No,
    /// The index could not be consulted; not evidence either way.
    Indeterminate { reason: String },
}

impl Archived {
    pub fn label(&self) -> &'static str {
        match self {
            Archived::Yes { .. } => "true",
            Archived::No => "false",
            Archived::Indeterminate { .. } => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum LiveStatus {
    NotChecked,
    Status { code: u16 },
    Unreachable { reason: String },
}

impl LiveStatus {
    pub fn likely_deleted(&self) -> bool {
        matches!(self, LiveStatus::Status { code: 404 | 410 })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeVerdict {
    pub url: String,
    pub archived: Archived,
    pub live_status: LiveStatus,
    pub checked_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProbeError {
    #[error("live probing is disabled")]
    Disabled,
}

pub struct Prober {
    archive: CdxClient,
    live: Option<Arc<Fetcher>>,
    hop_limit: u32,
}

impl Prober {
    /// Archive-only prober; `is_live` refuses.
    pub fn new(archive: CdxClient) -> Self {
        Prober {
            archive,
            live: None,
            hop_limit: crate::classifier::DEFAULT_HOP_LIMIT,
        }
    }

    /// Enable live probing through `fetcher`.
    pub fn with_live(mut self, fetcher: Arc<Fetcher>) -> Self {
        self.live = Some(fetcher);
        self
    }

    pub fn live_enabled(&self) -> bool {
        self.live.is_some()
    }

    /// Exact-URL index lookup. Only 2xx captures count as evidence.
    pub fn is_archived(&self, url: &str, endpoint: &ArchiveEndpoint) -> Archived {
        self.archived_at(url, endpoint).0
    }

    fn archived_at(&self, url: &str, endpoint: &ArchiveEndpoint) -> (Archived, Option<DateTime<Utc>>) {
        let query = CdxQuery::new(endpoint.clone(), url);
        let (records, at) = match self.archive.fetch_cdx_stamped(&query) {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(url, "archive lookup failed: {e}");
                return (Archived::Indeterminate { reason: e.to_string() }, None);
            }
        };
        let ok: Vec<Timestamp> = records
            .iter()
            .filter(|r| r.statuscode.code().is_some_and(|c| (200..300).contains(&c)))
            .map(|r| r.timestamp)
            .collect();
        let archived = match (ok.iter().min(), ok.iter().max()) {
            (Some(first), Some(last)) => Archived::Yes {
                count: ok.len() as u64,
                first: *first,
                last: *last,
            },
            _ => Archived::No,
        };
        (archived, Some(at))
    }

    /// Final status of the live URL. Requires live probing to be enabled.
    pub fn is_live(&self, url: &str) -> Result<LiveStatus, ProbeError> {
        self.live_at(url).map(|(s, _)| s)
    }

    fn live_at(&self, url: &str) -> Result<(LiveStatus, Option<DateTime<Utc>>), ProbeError> {
        let fetcher = self.live.as_ref().ok_or(ProbeError::Disabled)?;
        let mut current = if url.contains("://") { url.to_string() } else { format!("https://{url}") };
        let mut budget = self.hop_limit;
        loop {
            match fetcher.follow(&current, budget, CachePolicy::StatusOnly) {
                // Live sites move between hosts (instagram.com to www.); keep going.
                Ok(f) if f.left_host && f.hops <= budget => {
                    budget -= f.hops;
                    current = f.final_url;
                }
                Ok(f) if f.left_host => {
                    let reason = format!("redirect chain from {url} exceeded {} hops", self.hop_limit);
                    return Ok((LiveStatus::Unreachable { reason }, Some(f.fetched_at)));
                }
                Ok(f) => return Ok((LiveStatus::Status { code: f.response.status }, Some(f.fetched_at))),
                Err(e) => return Ok((LiveStatus::Unreachable { reason: e.to_string() }, None)),
            }
        }
    }

    /// `checked_at` is the newest response time involved, so a warm-cache
    /// rerun reproduces it.
    pub fn probe(&self, url: &str, endpoint: &ArchiveEndpoint) -> ProbeVerdict {
        let (archived, archived_at) = self.archived_at(url, endpoint);
        let (live_status, live_at) = match self.live_at(url) {
            Ok(s) => s,
            Err(ProbeError::Disabled) => (LiveStatus::NotChecked, None),
        };
        let checked_at = archived_at
            .max(live_at)
            .unwrap_or_else(|| self.archive.fetcher().clock().now());
        ProbeVerdict {
            url: url.to_string(),
            archived,
            live_status,
            checked_at,
        }
    }

    /// Probe `urls` on up to `workers` threads; output keeps input order.
    pub fn probe_many(&self, urls: &[String], endpoint: &ArchiveEndpoint, workers: usize) -> Vec<ProbeVerdict> {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<ProbeVerdict>>> = urls.iter().map(|_| Default::default()).collect();
        std::thread::scope(|s| {
            for _ in 0..workers.clamp(1, urls.len().max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    let Some(url) = urls.get(i) else { break };
                    *slots[i].lock().unwrap() = Some(self.probe(url, endpoint));
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every slot filled"))
            .collect()
    }
}
