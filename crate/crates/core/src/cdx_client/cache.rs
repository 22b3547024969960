//! On-disk response cache.
//!
//! Bodies live in content-addressed files under `objects/`; `manifest.json`
//! maps the SHA-256 of each request URL to its body file and fetch instant.
//! Entries never expire; callers bypass reads with a refresh flag.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::transport::HttpResponse;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn for_url(url: &str) -> Self {
        CacheKey(sha256_hex(url.as_bytes()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub file: String,
    pub fetched_at: DateTime<Utc>,
    pub url: String,
    pub status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    /// Stored for its status only; the body was not kept.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub body_omitted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachedResponse {
    pub response: HttpResponse,
    pub fetched_at: DateTime<Utc>,
    pub body_omitted: bool,
}

#[derive(Debug, thiserror::Error)]
#[error("cache storage error at {path}: {source}")]
pub struct StorageError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn storage(path: &Path) -> impl FnOnce(io::Error) -> StorageError + '_ {
    move |source| StorageError {
        path: path.to_path_buf(),
        source,
    }
}

const FLUSH_EVERY: usize = 256;

#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    state: Mutex<CacheState>,
}

#[derive(Debug, Default)]
struct CacheState {
    manifest: BTreeMap<CacheKey, CacheEntry>,
    pending: usize,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let dir = dir.into();
        let objects = dir.join("objects");
        fs::create_dir_all(&objects).map_err(storage(&objects))?;
        let manifest_path = dir.join("manifest.json");
        let manifest = match fs::read(&manifest_path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| StorageError {
                path: manifest_path.clone(),
                source: io::Error::new(io::ErrorKind::InvalidData, e),
            })?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(storage(&manifest_path)(e)),
        };
        Ok(ResponseCache {
            dir,
            state: Mutex::new(CacheState { manifest, pending: 0 }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().manifest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Ok(None)` is a miss.
    pub fn get(&self, key: &CacheKey) -> Result<Option<CachedResponse>, StorageError> {
        let entry = match self.state.lock().unwrap().manifest.get(key) {
            Some(e) => e.clone(),
            None => return Ok(None),
        };
        let path = self.dir.join(&entry.file);
        let body = match fs::read(&path) {
            Ok(b) => b,
            // A manifest entry without its object is treated as a miss.
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(storage(&path)(e)),
        };
        Ok(Some(CachedResponse {
            response: HttpResponse {
                status: entry.status,
                location: entry.location,
                content_type: entry.content_type,
                body,
            },
            fetched_at: entry.fetched_at,
            body_omitted: entry.body_omitted,
        }))
    }

    pub fn put(
        &self,
        key: &CacheKey,
        url: &str,
        response: &HttpResponse,
        fetched_at: DateTime<Utc>,
    ) -> Result<(), StorageError> {
        self.insert(key, url, response, fetched_at, false)
    }

    /// Records status and headers only.
    pub fn put_status(
        &self,
        key: &CacheKey,
        url: &str,
        response: &HttpResponse,
        fetched_at: DateTime<Utc>,
    ) -> Result<(), StorageError> {
        let headers_only = HttpResponse {
            body: Vec::new(),
            ..response.clone()
        };
        self.insert(key, url, &headers_only, fetched_at, true)
    }

    fn insert(
        &self,
        key: &CacheKey,
        url: &str,
        response: &HttpResponse,
        fetched_at: DateTime<Utc>,
        body_omitted: bool,
    ) -> Result<(), StorageError> {
        let file = format!("objects/{}", sha256_hex(&response.body));
        let path = self.dir.join(&file);
        if !path.exists() {
            write_atomic(&path, &response.body)?;
        }
        let mut state = self.state.lock().unwrap();
        state.manifest.insert(
            key.clone(),
            CacheEntry {
                file,
                fetched_at,
                url: url.to_string(),
                status: response.status,
                location: response.location.clone(),
                content_type: response.content_type.clone(),
                body_omitted,
            },
        );
        state.pending += 1;
        if state.pending >= FLUSH_EVERY {
            self.write_manifest(&mut state)?;
        }
        Ok(())
    }

    pub fn flush(&self) -> Result<(), StorageError> {
        let mut state = self.state.lock().unwrap();
        if state.pending > 0 {
            self.write_manifest(&mut state)?;
        }
        Ok(())
    }

    fn write_manifest(&self, state: &mut CacheState) -> Result<(), StorageError> {
        let path = self.dir.join("manifest.json");
        let bytes = serde_json::to_vec_pretty(&state.manifest).expect("manifest serializes");
        write_atomic(&path, &bytes)?;
        state.pending = 0;
        Ok(())
    }
}

impl Drop for ResponseCache {
    fn drop(&mut self) {
        if let Err(e) = self.flush() {
            tracing::warn!("failed to flush cache manifest: {e}");
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StorageError> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(storage(&tmp))?;
    fs::rename(&tmp, path).map_err(storage(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(secs: i64) -> DateTime<Utc> {
        DateTime::from_timestamp(secs, 0).unwrap()
    }

    #[test]
    fn put_then_get_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = CacheKey::for_url("https://web.archive.org/cdx/search/cdx?url=a");
        let body = HttpResponse::new(200, vec![0u8, 159, 146, 150, b'x']);
        cache.put(&key, "u", &body, at(100)).unwrap();
        let got = cache.get(&key).unwrap().unwrap();
        assert_eq!(got.response.body, body.body);
        assert_eq!(got.fetched_at, at(100));
    }

    #[test]
    fn miss_is_not_error() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        assert!(cache.get(&CacheKey::for_url("nope")).unwrap().is_none());
    }

    #[test]
    fn persists_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let key = CacheKey::for_url("https://x/");
        {
            let cache = ResponseCache::open(dir.path()).unwrap();
            cache
                .put(&key, "https://x/", &HttpResponse::redirect(302, "https://y/"), at(5))
                .unwrap();
        }
        let cache = ResponseCache::open(dir.path()).unwrap();
        let got = cache.get(&key).unwrap().unwrap();
        assert_eq!(got.response.status, 302);
        assert_eq!(got.response.location.as_deref(), Some("https://y/"));
        let manifest: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        let entry = &manifest[key.as_str()];
        assert!(entry["file"].as_str().unwrap().starts_with("objects/"));
        assert!(entry["fetched_at"].is_string());
    }

    #[test]
    fn identical_bodies_share_one_object() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let body = HttpResponse::new(200, "same");
        cache.put(&CacheKey::for_url("a"), "a", &body, at(1)).unwrap();
        cache.put(&CacheKey::for_url("b"), "b", &body, at(1)).unwrap();
        assert_eq!(fs::read_dir(dir.path().join("objects")).unwrap().count(), 1);
    }
}
