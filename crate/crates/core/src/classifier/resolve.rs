use std::sync::Arc;

use crate::cdx_client::{CachePolicy, EndpointRegistry, FetchError, Fetcher};

pub const DEFAULT_HOP_LIMIT: u32 = 10;

/// Where a replay redirect chain ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedirectResolution {
    pub start_urim: String,
    /// Underlying URI-R of the last memento in the chain.
    pub final_uri: String,
    pub hops: u32,
    pub final_status: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("redirect chain from {urim} exceeded {limit} hops")]
    HopLimitExceeded { urim: String, limit: u32 },
    #[error("network error resolving {urim}: {reason}")]
    Network { urim: String, reason: String },
}

pub trait RedirectResolver: Send + Sync {
    fn resolve_redirect(&self, urim: &str) -> Result<RedirectResolution, ResolveError>;
}

/// Walks redirect chains through the archive's replay service. Never
/// requests the live site: chains leaving the archive host stop there.
pub struct ReplayResolver {
    fetcher: Arc<Fetcher>,
    registry: EndpointRegistry,
    hop_limit: u32,
}

impl ReplayResolver {
    pub fn new(fetcher: Arc<Fetcher>, registry: EndpointRegistry) -> Self {
        ReplayResolver {
            fetcher,
            registry,
            hop_limit: DEFAULT_HOP_LIMIT,
        }
    }

    pub fn hop_limit(mut self, limit: u32) -> Self {
        self.hop_limit = limit;
        self
    }
}

impl RedirectResolver for ReplayResolver {
    fn resolve_redirect(&self, urim: &str) -> Result<RedirectResolution, ResolveError> {
        let followed = self
            .fetcher
            .follow(urim, self.hop_limit, CachePolicy::StatusOnly)
            .map_err(|e| match e {
                FetchError::HopLimitExceeded { limit, .. } => ResolveError::HopLimitExceeded {
                    urim: urim.to_string(),
                    limit,
                },
                other => ResolveError::Network {
                    urim: urim.to_string(),
                    reason: other.to_string(),
                },
            })?;
        let final_uri = self
            .registry
            .for_urim(&followed.final_url)
            .and_then(|ep| ep.parse_urim(&followed.final_url))
            .map(|p| p.original)
            .unwrap_or_else(|| followed.final_url.clone());
        Ok(RedirectResolution {
            start_urim: urim.to_string(),
            final_uri,
            hops: followed.hops,
            final_status: followed.response.status,
        })
    }
}

/// Resolver for runs that must not touch the network at all.
pub struct NoResolver;

impl RedirectResolver for NoResolver {
    fn resolve_redirect(&self, urim: &str) -> Result<RedirectResolution, ResolveError> {
        Err(ResolveError::Network {
            urim: urim.to_string(),
            reason: "resolution disabled".into(),
        })
    }
}
