//! Pluggable HTTP transport.
//!
//! Everything that touches the network goes through [`Transport`]. Transports
//! never follow redirects on their own; chains are walked by the caller so the
//! hops can be counted and the final URI recovered. Tests and offline runs use
//! [`ReplayTransport`], which serves exchanges recorded in a cassette directory.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use url::Url;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    #[serde(skip)]
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn new(status: u16, body: impl Into<Vec<u8>>) -> Self {
        HttpResponse {
            status,
            location: None,
            content_type: None,
            body: body.into(),
        }
    }

    pub fn redirect(status: u16, location: impl Into<String>) -> Self {
        HttpResponse {
            status,
            location: Some(location.into()),
            content_type: None,
            body: Vec::new(),
        }
    }

    pub fn is_redirect(&self) -> bool {
        (300..400).contains(&self.status) && self.location.is_some()
    }

    pub fn text_lossy(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("connection to {url} failed: {reason}")]
    Connect { url: String, reason: String },
    #[error("request to {url} timed out")]
    Timeout { url: String },
    #[error("no recorded exchange for {url}")]
    NotRecorded { url: String },
    #[error("request to {url} blocked: host not on the allowlist")]
    Blocked { url: String },
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        (**self).get(url)
    }
}

/// Normalized lookup key: query pairs are decoded and sorted so parameter
/// order and percent-encoding choices do not affect matching.
pub fn exchange_key(url: &str) -> String {
    match Url::parse(url) {
        Ok(parsed) => {
            let mut pairs: Vec<(String, String)> = parsed
                .query_pairs()
                .map(|(k, v)| (k.into_owned(), v.into_owned()))
                .collect();
            pairs.sort();
            let mut key = format!(
                "{}://{}{}",
                parsed.scheme(),
                parsed.host_str().unwrap_or(""),
                parsed.path()
            );
            if !pairs.is_empty() {
                key.push('?');
                let joined: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
                key.push_str(&joined.join("&"));
            }
            key
        }
        Err(_) => url.to_string(),
    }
}

/// One line of a cassette index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordedExchange {
    pub url: String,
    pub status: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    /// Inline body text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    /// Body stored in a file relative to the cassette directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_file: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CassetteError {
    #[error("cassette io at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cassette {path} line {line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

/// Serves recorded exchanges from `*.jsonl` index files in a directory.
/// Unknown URLs fail with [`TransportError::NotRecorded`], never a live request.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    exchanges: HashMap<String, (HttpResponse, Option<PathBuf>)>,
}

impl ReplayTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, CassetteError> {
        let mut transport = ReplayTransport::new();
        transport.load_dir(dir)?;
        Ok(transport)
    }

    /// Add every `*.jsonl` index in `dir`. Later entries win on key clashes.
    pub fn load_dir(&mut self, dir: impl AsRef<Path>) -> Result<(), CassetteError> {
        let dir = dir.as_ref();
        let mut indexes: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|source| CassetteError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        indexes.sort();
        for index in indexes {
            self.load_index(dir, &index)?;
        }
        Ok(())
    }

    fn load_index(&mut self, dir: &Path, index: &Path) -> Result<(), CassetteError> {
        let file = fs::File::open(index).map_err(|source| CassetteError::Io {
            path: index.to_path_buf(),
            source,
        })?;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CassetteError::Io {
                path: index.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: RecordedExchange =
                serde_json::from_str(&line).map_err(|source| CassetteError::Parse {
                    path: index.to_path_buf(),
                    line: i + 1,
                    source,
                })?;
            let body_path = ex.body_file.as_ref().map(|f| dir.join(f));
            let resp = HttpResponse {
                status: ex.status,
                location: ex.location,
                content_type: ex.content_type,
                body: ex.body.map(String::into_bytes).unwrap_or_default(),
            };
            self.exchanges.insert(exchange_key(&ex.url), (resp, body_path));
        }
        Ok(())
    }

    pub fn insert(&mut self, url: &str, response: HttpResponse) {
        self.exchanges.insert(exchange_key(url), (response, None));
    }

    pub fn with(mut self, url: &str, response: HttpResponse) -> Self {
        self.insert(url, response);
        self
    }

    pub fn len(&self) -> usize {
        self.exchanges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exchanges.is_empty()
    }

    pub fn contains(&self, url: &str) -> bool {
        self.exchanges.contains_key(&exchange_key(url))
    }
}

impl Transport for ReplayTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let (resp, body_path) =
            self.exchanges
                .get(&exchange_key(url))
                .ok_or_else(|| TransportError::NotRecorded {
                    url: url.to_string(),
                })?;
        let mut resp = resp.clone();
        if let Some(path) = body_path {
            resp.body = fs::read(path).map_err(|e| TransportError::Connect {
                url: url.to_string(),
                reason: format!("cassette body {}: {e}", path.display()),
            })?;
        }
        Ok(resp)
    }
}

/// Counts calls made through the wrapped transport.
#[derive(Debug)]
pub struct CountingTransport<T> {
    inner: T,
    calls: AtomicU64,
    log: Mutex<Vec<String>>,
}

impl<T: Transport> CountingTransport<T> {
    pub fn new(inner: T) -> Self {
        CountingTransport {
            inner,
            calls: AtomicU64::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requested(&self) -> Vec<String> {
        self.log.lock().unwrap().clone()
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.log.lock().unwrap().push(url.to_string());
        self.inner.get(url)
    }
}

/// Refuses requests to hosts outside the allowlist.
#[derive(Debug)]
pub struct AllowlistTransport<T> {
    inner: T,
    hosts: Vec<String>,
    refused: AtomicU64,
}

impl<T: Transport> AllowlistTransport<T> {
    pub fn new(inner: T, hosts: impl IntoIterator<Item = impl Into<String>>) -> Self {
        AllowlistTransport {
            inner,
            hosts: hosts.into_iter().map(Into::into).collect(),
            refused: AtomicU64::new(0),
        }
    }

    pub fn refused(&self) -> u64 {
        self.refused.load(Ordering::SeqCst)
    }

    fn allowed(&self, url: &str) -> bool {
        let Ok(parsed) = Url::parse(url) else {
            return false;
        };
        let Some(host) = parsed.host_str() else {
            return false;
        };
        self.hosts
            .iter()
            .any(|h| host == h || host.ends_with(&format!(".{h}")))
    }
}

impl<T: Transport> Transport for AllowlistTransport<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        if !self.allowed(url) {
            self.refused.fetch_add(1, Ordering::SeqCst);
            return Err(TransportError::Blocked {
                url: url.to_string(),
            });
        }
        self.inner.get(url)
    }
}

/// Writes every exchange passing through into a cassette directory.
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
    index: Mutex<fs::File>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(dir.join("bodies"))?;
        let index = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join("recorded.jsonl"))?;
        Ok(RecordingTransport {
            inner,
            dir,
            index: Mutex::new(index),
        })
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let resp = self.inner.get(url)?;
        let body_file = if resp.body.is_empty() {
            None
        } else {
            let name = format!("bodies/{}", crate::cdx_client::cache::sha256_hex(&resp.body));
            // Content-addressed, so an existing file already holds these bytes.
            let path = self.dir.join(&name);
            if !path.exists() {
                let _ = fs::write(&path, &resp.body);
            }
            Some(name)
        };
        let ex = RecordedExchange {
            url: url.to_string(),
            status: resp.status,
            location: resp.location.clone(),
            content_type: resp.content_type.clone(),
            body: None,
            body_file,
        };
        if let Ok(line) = serde_json::to_string(&ex) {
            let mut index = self.index.lock().unwrap();
            let _ = writeln!(index, "{line}");
        }
        Ok(resp)
    }
}

/// Closure-backed transport, mostly for tests.
pub struct FnTransport<F>(pub F);

impl<F> Transport for FnTransport<F>
where
    F: Fn(&str) -> Result<HttpResponse, TransportError> + Send + Sync,
{
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        (self.0)(url)
    }
}
