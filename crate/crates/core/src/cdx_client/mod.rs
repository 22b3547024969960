//! CDX index harvesting: endpoints, queries, parsing, caching and rate limiting.

pub mod cache;
mod client;
pub mod endpoint;
pub mod fetcher;
pub mod limiter;
pub mod parse;
pub mod record;

pub use cache::{CacheKey, CachedResponse, ResponseCache, StorageError};
pub use client::{CdxClient, CdxError};
pub use endpoint::{ArchiveEndpoint, CdxField, CdxOutput, EndpointError, EndpointRegistry, ParsedUrim};
pub use fetcher::{CachePolicy, FetchError, Fetched, Fetcher, FetcherBuilder, Followed, RetryPolicy};
pub use limiter::{RateLimiter, RateLimiters};
pub use parse::{parse_cdx_body, CdxPage, MalformedRow};
pub use record::{CdxQuery, CdxRecord, CdxStatus, MatchScope, QueryError};

use crate::time::Timestamp;

/// Replay URL of a captured record.
pub fn build_urim(endpoint: &ArchiveEndpoint, record: &CdxRecord) -> String {
    endpoint.instantiate(&record.timestamp, &record.original)
}

/// Timestamp recovered from a URI-M, if it belongs to `endpoint`.
pub fn urim_timestamp(endpoint: &ArchiveEndpoint, urim: &str) -> Option<Timestamp> {
    endpoint.parse_urim(urim).map(|p| p.timestamp)
}

/// CDX lookup target for an account page.
pub fn account_target(handle: &str) -> String {
    format!("www.instagram.com/{handle}/")
}
