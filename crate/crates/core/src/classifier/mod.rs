//! Replay-outcome classification of CDX records.
//!
//! 2xx captures are successes, 3xx captures are resolved through the replay
//! service and split by where the chain ends (login wall, a canonical spelling
//! of the same page, or elsewhere), 4xx/5xx are errors. Revisit records borrow
//! the class of the earlier capture sharing their digest, falling back to a
//! replay request when no digest match exists.

pub mod canonical;
mod resolve;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use canonical::{canonicalize, is_canonicalization_redirect, is_login_uri, same_resource, ParseError};
pub use resolve::{NoResolver, RedirectResolution, RedirectResolver, ReplayResolver, ResolveError, DEFAULT_HOP_LIMIT};

use crate::cdx_client::{ArchiveEndpoint, CdxRecord};

/// What a revisit turned out to be. Has no revisit variant, so resolution
/// depth is one by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RevisitResolution {
    Success,
    RedirectToLogin { final_uri: String },
    RedirectCanonical { final_uri: String },
    RedirectOther { final_uri: Option<String> },
    ClientError { status: u16 },
    ServerError { status: u16 },
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MementoClass {
    Success,
    RedirectToLogin { final_uri: String },
    RedirectCanonical { final_uri: String },
    /// `final_uri` is `None` when the chain could not be resolved.
    RedirectOther { final_uri: Option<String> },
    ClientError { status: u16 },
    ServerError { status: u16 },
    Revisit { resolution: RevisitResolution },
}

impl MementoClass {
    /// The class a revisit pointing at this capture inherits.
    pub fn as_revisit_target(&self) -> RevisitResolution {
        match self {
            MementoClass::Success => RevisitResolution::Success,
            MementoClass::RedirectToLogin { final_uri } => RevisitResolution::RedirectToLogin {
                final_uri: final_uri.clone(),
            },
            MementoClass::RedirectCanonical { final_uri } => RevisitResolution::RedirectCanonical {
                final_uri: final_uri.clone(),
            },
            MementoClass::RedirectOther { final_uri } => RevisitResolution::RedirectOther {
                final_uri: final_uri.clone(),
            },
            MementoClass::ClientError { status } => RevisitResolution::ClientError { status: *status },
            MementoClass::ServerError { status } => RevisitResolution::ServerError { status: *status },
            MementoClass::Revisit { resolution } => resolution.clone(),
        }
    }

    pub fn final_uri(&self) -> Option<&str> {
        match self {
            MementoClass::RedirectToLogin { final_uri } | MementoClass::RedirectCanonical { final_uri } => {
                Some(final_uri)
            }
            MementoClass::RedirectOther { final_uri } => final_uri.as_deref(),
            MementoClass::Revisit { resolution } => match resolution {
                RevisitResolution::RedirectToLogin { final_uri }
                | RevisitResolution::RedirectCanonical { final_uri } => Some(final_uri),
                RevisitResolution::RedirectOther { final_uri } => final_uri.as_deref(),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_login_redirect(&self) -> bool {
        matches!(self, MementoClass::RedirectToLogin { .. })
    }
}

fn resolution_label(r: &RevisitResolution) -> String {
    match r {
        RevisitResolution::Success => "success".into(),
        RevisitResolution::RedirectToLogin { .. } => "redirect_login".into(),
        RevisitResolution::RedirectCanonical { .. } => "redirect_canonical".into(),
        RevisitResolution::RedirectOther { .. } => "redirect_other".into(),
        RevisitResolution::ClientError { status } => format!("client_error:{status}"),
        RevisitResolution::ServerError { status } => format!("server_error:{status}"),
        RevisitResolution::Unresolved => "unresolved".into(),
    }
}

/// Labels: `success`, `redirect_login`, `redirect_canonical`, `redirect_other`,
/// `client_error:404`, `server_error:503`, and `revisit:<label>`.
impl fmt::Display for MementoClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MementoClass::Revisit { resolution } => write!(f, "revisit:{}", resolution_label(resolution)),
            other => f.write_str(&resolution_label(&other.as_revisit_target())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown class label {0:?}")]
pub struct LabelError(pub String);

impl MementoClass {
    /// Inverse of `Display`, given the final URI column.
    pub fn from_label(label: &str, final_uri: Option<&str>) -> Result<MementoClass, LabelError> {
        let err = || LabelError(label.to_string());
        let need_uri = || final_uri.map(str::to_string).ok_or_else(err);
        let status = |s: &str| u16::from_str(s).map_err(|_| err());
        let (revisit, base) = match label.strip_prefix("revisit:") {
            Some(rest) => (true, rest),
            None => (false, label),
        };
        let (kind, arg) = match base.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (base, None),
        };
        let res = match (kind, arg) {
            ("success", None) => RevisitResolution::Success,
            ("redirect_login", None) => RevisitResolution::RedirectToLogin { final_uri: need_uri()? },
            ("redirect_canonical", None) => RevisitResolution::RedirectCanonical { final_uri: need_uri()? },
            ("redirect_other", None) => RevisitResolution::RedirectOther {
                final_uri: final_uri.map(str::to_string),
            },
            ("client_error", Some(s)) => RevisitResolution::ClientError { status: status(s)? },
            ("server_error", Some(s)) => RevisitResolution::ServerError { status: status(s)? },
            ("unresolved", None) if revisit => RevisitResolution::Unresolved,
            _ => return Err(err()),
        };
        if revisit {
            return Ok(MementoClass::Revisit { resolution: res });
        }
        Ok(match res {
            RevisitResolution::Success => MementoClass::Success,
            RevisitResolution::RedirectToLogin { final_uri } => MementoClass::RedirectToLogin { final_uri },
            RevisitResolution::RedirectCanonical { final_uri } => MementoClass::RedirectCanonical { final_uri },
            RevisitResolution::RedirectOther { final_uri } => MementoClass::RedirectOther { final_uri },
            RevisitResolution::ClientError { status } => MementoClass::ClientError { status },
            RevisitResolution::ServerError { status } => MementoClass::ServerError { status },
            RevisitResolution::Unresolved => unreachable!("guarded above"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolvedVia {
    Digest,
    Network,
    None,
}

impl fmt::Display for ResolvedVia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResolvedVia::Digest => "digest",
            ResolvedVia::Network => "network",
            ResolvedVia::None => "none",
        })
    }
}

impl FromStr for ResolvedVia {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "digest" => Ok(ResolvedVia::Digest),
            "network" => Ok(ResolvedVia::Network),
            "none" => Ok(ResolvedVia::None),
            other => Err(LabelError(other.to_string())),
        }
    }
}

/// A record together with its class and how the class was reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub record: CdxRecord,
    pub class: MementoClass,
    pub hops: Option<u32>,
    pub resolved_via: ResolvedVia,
    /// Why a redirect or revisit stayed unresolved.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("unknown status {status:?} at {timestamp} for {original}")]
    UnknownStatus {
        status: String,
        timestamp: String,
        original: String,
    },
}

/// Class of a resolved replay chain for a capture of `original`.
pub fn class_of_resolution(original: &str, r: &RedirectResolution) -> RevisitResolution {
    if is_login_uri(&r.final_uri).unwrap_or(false) {
        return RevisitResolution::RedirectToLogin {
            final_uri: r.final_uri.clone(),
        };
    }
    match r.final_status {
        400..=499 => return RevisitResolution::ClientError { status: r.final_status },
        500..=599 => return RevisitResolution::ServerError { status: r.final_status },
        _ => {}
    }
    if r.hops == 0 && (200..300).contains(&r.final_status) {
        return RevisitResolution::Success;
    }
    if same_resource(original, &r.final_uri) {
        RevisitResolution::RedirectCanonical {
            final_uri: r.final_uri.clone(),
        }
    } else {
        RevisitResolution::RedirectOther {
            final_uri: Some(r.final_uri.clone()),
        }
    }
}

pub struct Classifier<'a> {
    resolver: &'a dyn RedirectResolver,
    endpoint: &'a ArchiveEndpoint,
}

impl<'a> Classifier<'a> {
    pub fn new(resolver: &'a dyn RedirectResolver, endpoint: &'a ArchiveEndpoint) -> Self {
        Classifier { resolver, endpoint }
    }

    fn urim(&self, record: &CdxRecord) -> String {
        crate::cdx_client::build_urim(self.endpoint, record)
    }

    /// Classify one non-revisit record, or a revisit with no history.
    pub fn classify(&self, record: &CdxRecord) -> Result<Classification, ClassifyError> {
        self.classify_with_history(record, &[])
    }

    pub fn classify_with_history(
        &self,
        record: &CdxRecord,
        prior: &[Classification],
    ) -> Result<Classification, ClassifyError> {
        if record.is_revisit() {
            return Ok(self.resolve_revisit(record, prior));
        }
        let unknown = || ClassifyError::UnknownStatus {
            status: record.statuscode.to_string(),
            timestamp: record.timestamp.to_string(),
            original: record.original.clone(),
        };
        let status = record.statuscode.code().ok_or_else(unknown)?;
        let done = |class| Classification {
            record: record.clone(),
            class,
            hops: None,
            resolved_via: ResolvedVia::None,
            note: None,
        };
        match status {
            200..=299 => Ok(done(MementoClass::Success)),
            300..=399 => Ok(self.classify_redirect(record)),
            400..=499 => Ok(done(MementoClass::ClientError { status })),
            500..=599 => Ok(done(MementoClass::ServerError { status })),
            _ => Err(unknown()),
        }
    }

    fn classify_redirect(&self, record: &CdxRecord) -> Classification {
        match self.resolver.resolve_redirect(&self.urim(record)) {
            Ok(resolution) => {
                let final_uri = resolution.final_uri.clone();
                let class = if is_login_uri(&final_uri).unwrap_or(false) {
                    MementoClass::RedirectToLogin { final_uri }
                } else if is_canonicalization_redirect(record, &final_uri) {
                    MementoClass::RedirectCanonical { final_uri }
                } else {
                    MementoClass::RedirectOther {
                        final_uri: Some(final_uri),
                    }
                };
                Classification {
                    record: record.clone(),
                    class,
                    hops: Some(resolution.hops),
                    resolved_via: ResolvedVia::Network,
                    note: None,
                }
            }
            Err(e) => Classification {
                record: record.clone(),
                class: MementoClass::RedirectOther { final_uri: None },
                hops: None,
                resolved_via: ResolvedVia::None,
                note: Some(format!("unresolvable redirect: {e}")),
            },
        }
    }

    /// Digest match against `prior` (most recent first), then a replay
    /// request, then `Unresolved`.
    pub fn resolve_revisit(&self, record: &CdxRecord, prior: &[Classification]) -> Classification {
        if let Some(digest) = record.digest.as_deref() {
            let hit = prior
                .iter()
                .rev()
                .filter(|c| c.record.timestamp <= record.timestamp)
                .filter(|c| c.record.digest.as_deref() == Some(digest))
                .map(|c| c.class.as_revisit_target())
                .find(|r| *r != RevisitResolution::Unresolved);
            if let Some(resolution) = hit {
                return Classification {
                    record: record.clone(),
                    class: MementoClass::Revisit { resolution },
                    hops: None,
                    resolved_via: ResolvedVia::Digest,
                    note: None,
                };
            }
        }
        match self.resolver.resolve_redirect(&self.urim(record)) {
            Ok(r) => Classification {
                record: record.clone(),
                class: MementoClass::Revisit {
                    resolution: class_of_resolution(&record.original, &r),
                },
                hops: Some(r.hops),
                resolved_via: ResolvedVia::Network,
                note: None,
            },
            Err(e) => Classification {
                record: record.clone(),
                class: MementoClass::Revisit {
                    resolution: RevisitResolution::Unresolved,
                },
                hops: None,
                resolved_via: ResolvedVia::None,
                note: Some(format!("unresolved revisit: {e}")),
            },
        }
    }

    /// Classify one account's records. Non-revisits are resolved on up to
    /// `workers` threads; revisits are then settled in timestamp order so
    /// digest matches see every earlier capture. Output is sorted by timestamp.
    pub fn classify_batch(
        &self,
        records: &[CdxRecord],
        workers: usize,
    ) -> Vec<Result<Classification, ClassifyError>> {
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| records[a].timestamp.cmp(&records[b].timestamp).then(a.cmp(&b)));
        let sorted: Vec<&CdxRecord> = order.iter().map(|&i| &records[i]).collect();

        let direct: Vec<usize> = (0..sorted.len()).filter(|&i| !sorted[i].is_revisit()).collect();
        let slots: Vec<Mutex<Option<Result<Classification, ClassifyError>>>> =
            (0..sorted.len()).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..workers.max(1).min(direct.len().max(1)) {
                s.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&i) = direct.get(k) else { break };
                    *slots[i].lock().unwrap() = Some(self.classify(sorted[i]));
                });
            }
        });

        let mut out: Vec<Result<Classification, ClassifyError>> = Vec::with_capacity(sorted.len());
        let mut history: Vec<Classification> = Vec::with_capacity(sorted.len());
        let mut by_digest: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, record) in sorted.iter().enumerate() {
            let result = match slots[i].lock().unwrap().take() {
                Some(r) => r,
                None => {
                    let candidates: Vec<Classification> = record
                        .digest
                        .as_ref()
                        .and_then(|d| by_digest.get(d))
                        .map(|idx| idx.iter().map(|&h| history[h].clone()).collect())
                        .unwrap_or_default();
                    Ok(self.resolve_revisit(record, &candidates))
                }
            };
            if let Ok(c) = &result {
                if let Some(d) = &c.record.digest {
                    by_digest.entry(d.clone()).or_default().push(history.len());
                }
                history.push(c.clone());
            }
            out.push(result);
        }
        out
    }
}
