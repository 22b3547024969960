//! Rate-limited, retrying, caching GET shared by every archive-facing module.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use url::Url;

use super::cache::{CacheKey, ResponseCache, StorageError};
use super::limiter::RateLimiters;
use crate::time::{Clock, SystemClock};
use crate::transport::{HttpResponse, Transport, TransportError};

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts including the first.
    pub attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_secs(2),
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, attempt: u32) -> Duration {
        // attempt is 1-based; no delay before the first.
        if attempt <= 1 {
            return Duration::ZERO;
        }
        self.base_delay.mul_f64(self.factor.powi(attempt as i32 - 2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    /// Read and write the full response.
    Use,
    /// Read and write, but store no body (status probes).
    StatusOnly,
    /// Neither read nor write.
    Bypass,
}

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("network error for {url}: {reason}")]
    Network { url: String, reason: String },
    #[error("rate limited by {url} after {attempts} attempts")]
    RateLimited { url: String, attempts: u32 },
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error("redirect chain from {start} exceeded {limit} hops")]
    HopLimitExceeded { start: String, limit: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub response: HttpResponse,
    pub fetched_at: DateTime<Utc>,
    pub from_cache: bool,
}

/// Result of walking a redirect chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Followed {
    pub final_url: String,
    pub response: HttpResponse,
    pub hops: u32,
    pub fetched_at: DateTime<Utc>,
    /// Set when the chain left the starting host; the walk stops there.
    pub left_host: bool,
}

pub struct Fetcher {
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiters: RateLimiters,
    retry: RetryPolicy,
    cache: Option<Arc<ResponseCache>>,
    refresh: bool,
    network_calls: AtomicU64,
}

pub struct FetcherBuilder {
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    rate: f64,
    retry: RetryPolicy,
    cache: Option<Arc<ResponseCache>>,
    refresh: bool,
}

impl FetcherBuilder {
    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Requests per second per host.
    pub fn rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn cache(mut self, cache: Arc<ResponseCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn refresh(mut self, refresh: bool) -> Self {
        self.refresh = refresh;
        self
    }

    pub fn build(self) -> Fetcher {
        Fetcher {
            limiters: RateLimiters::new(self.rate, self.clock.clone()),
            transport: self.transport,
            clock: self.clock,
            retry: self.retry,
            cache: self.cache,
            refresh: self.refresh,
            network_calls: AtomicU64::new(0),
        }
    }
}

fn host_of(url: &str) -> String {
    Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(str::to_string))
        .unwrap_or_default()
}

fn retryable_status(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

fn retryable_error(err: &TransportError) -> bool {
    matches!(err, TransportError::Connect { .. } | TransportError::Timeout { .. })
}

impl Fetcher {
    pub fn builder(transport: Arc<dyn Transport>) -> FetcherBuilder {
        FetcherBuilder {
            transport,
            clock: Arc::new(SystemClock::new()),
            rate: 1.0,
            retry: RetryPolicy::default(),
            cache: None,
            refresh: false,
        }
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn limiters(&self) -> &RateLimiters {
        &self.limiters
    }

    pub fn cache(&self) -> Option<&Arc<ResponseCache>> {
        self.cache.as_ref()
    }

    /// Requests that reached the transport, retries included.
    pub fn network_calls(&self) -> u64 {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn get(&self, url: &str, policy: CachePolicy) -> Result<Fetched, FetchError> {
        let key = CacheKey::for_url(url);
        if let (Some(cache), false, true) = (&self.cache, self.refresh, policy != CachePolicy::Bypass) {
            if let Some(hit) = cache.get(&key)? {
                // A status-only entry cannot serve a request that needs the body.
                if !(hit.body_omitted && policy == CachePolicy::Use) {
                    return Ok(Fetched {
                        response: hit.response,
                        fetched_at: hit.fetched_at,
                        from_cache: true,
                    });
                }
            }
        }
        let response = self.get_with_retries(url)?;
        let fetched_at = self.clock.now();
        if let Some(cache) = &self.cache {
            if !retryable_status(response.status) {
                match policy {
                    CachePolicy::Use => cache.put(&key, url, &response, fetched_at)?,
                    CachePolicy::StatusOnly => cache.put_status(&key, url, &response, fetched_at)?,
                    CachePolicy::Bypass => {}
                }
            }
        }
        Ok(Fetched {
            response,
            fetched_at,
            from_cache: false,
        })
    }

    fn get_with_retries(&self, url: &str) -> Result<HttpResponse, FetchError> {
        let limiter = self.limiters.for_host(&host_of(url));
        let attempts = self.retry.attempts.max(1);
        let mut last_failure = String::new();
        for attempt in 1..=attempts {
            let delay = self.retry.delay_before(attempt);
            if !delay.is_zero() {
                self.clock.sleep(delay);
            }
            limiter.acquire();
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            match self.transport.get(url) {
                Ok(resp) if retryable_status(resp.status) => {
                    tracing::debug!(url, status = resp.status, attempt, "retryable status");
                    if attempt == attempts {
                        if resp.status == 429 {
                            return Err(FetchError::RateLimited {
                                url: url.to_string(),
                                attempts,
                            });
                        }
                        // Persistent 5xx is data for replay probes, not a failure.
                        return Ok(resp);
                    }
                    last_failure = format!("status {}", resp.status);
                }
                Ok(resp) => return Ok(resp),
                Err(e) if retryable_error(&e) && attempt < attempts => {
                    tracing::debug!(url, attempt, "transport error: {e}");
                    last_failure = e.to_string();
                }
                Err(e) => {
                    return Err(FetchError::Network {
                        url: url.to_string(),
                        reason: e.to_string(),
                    })
                }
            }
        }
        Err(FetchError::Network {
            url: url.to_string(),
            reason: last_failure,
        })
    }

    /// GET `url`, following redirects while they stay on the starting host.
    pub fn follow(&self, url: &str, max_hops: u32, policy: CachePolicy) -> Result<Followed, FetchError> {
        let start_host = host_of(url);
        let mut current = url.to_string();
        let mut hops = 0u32;
        loop {
            let fetched = self.get(&current, policy)?;
            let resp = fetched.response;
            let next = match (&resp.location, resp.is_redirect()) {
                (Some(loc), true) => resolve_location(&current, loc),
                _ => None,
            };
            let Some(next) = next else {
                return Ok(Followed {
                    final_url: current,
                    response: resp,
                    hops,
                    fetched_at: fetched.fetched_at,
                    left_host: false,
                });
            };
            if host_of(&next) != start_host {
                return Ok(Followed {
                    final_url: next,
                    response: resp,
                    hops: hops + 1,
                    fetched_at: fetched.fetched_at,
                    left_host: true,
                });
            }
            hops += 1;
            if hops > max_hops {
                return Err(FetchError::HopLimitExceeded {
                    start: url.to_string(),
                    limit: max_hops,
                });
            }
            current = next;
        }
    }
}

fn resolve_location(base: &str, location: &str) -> Option<String> {
    Url::parse(base)
        .ok()
        .and_then(|b| b.join(location).ok())
        .map(|u| u.to_string())
}
