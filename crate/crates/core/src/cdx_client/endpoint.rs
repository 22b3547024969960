use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::time::Timestamp;

/// Column names a CDX server may emit. Aliases cover the Wayback (`original`,
/// `mimetype`, `statuscode`) and pywb/Arquivo (`url`, `mime`, `status`) spellings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CdxField {
    UrlKey,
    Timestamp,
    Original,
    MimeType,
    StatusCode,
    Digest,
    Length,
    Offset,
    Filename,
    #[serde(untagged)]
    Other(String),
}

impl CdxField {
    pub fn from_name(name: &str) -> CdxField {
        match name.trim().to_ascii_lowercase().as_str() {
            "urlkey" => CdxField::UrlKey,
            "timestamp" => CdxField::Timestamp,
            "original" | "url" => CdxField::Original,
            "mimetype" | "mime" => CdxField::MimeType,
            "statuscode" | "status" => CdxField::StatusCode,
            "digest" => CdxField::Digest,
            "length" => CdxField::Length,
            "offset" => CdxField::Offset,
            "filename" => CdxField::Filename,
            other => CdxField::Other(other.to_string()),
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, CdxField::Other(_))
    }
}

/// Response encoding requested from the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CdxOutput {
    /// `output=json` answering with an array of arrays (Wayback).
    JsonArray,
    /// `output=json` answering with one object per line (pywb, Arquivo.pt).
    JsonLines,
    /// Space-delimited text, columns per [`ArchiveEndpoint::columns`].
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveEndpoint {
    pub name: String,
    pub cdx_base: String,
    /// Replay URL pattern with `{timestamp}` and `{original}` placeholders.
    pub replay_template: String,
    #[serde(default = "default_true")]
    pub supports_digest: bool,
    #[serde(default = "default_output")]
    pub output: CdxOutput,
    /// Column layout used when the response carries no header row.
    #[serde(default = "default_columns")]
    pub columns: Vec<CdxField>,
    #[serde(default)]
    pub supports_resume_key: bool,
}

fn default_true() -> bool {
    true
}

fn default_output() -> CdxOutput {
    CdxOutput::JsonArray
}

fn default_columns() -> Vec<CdxField> {
    vec![
        CdxField::UrlKey,
        CdxField::Timestamp,
        CdxField::Original,
        CdxField::MimeType,
        CdxField::StatusCode,
        CdxField::Digest,
        CdxField::Length,
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EndpointError {
    #[error("endpoint {name}: {reason}")]
    Invalid { name: String, reason: String },
    #[error("duplicate endpoint name {0}")]
    Duplicate(String),
    #[error("endpoint registry is empty")]
    Empty,
    #[error("unknown endpoint {0}")]
    Unknown(String),
}

impl ArchiveEndpoint {
    pub fn wayback() -> Self {
        ArchiveEndpoint {
            name: "wayback".into(),
            cdx_base: "https://web.archive.org/cdx/search/cdx".into(),
            replay_template: "https://web.archive.org/web/{timestamp}/{original}".into(),
            supports_digest: true,
            output: CdxOutput::JsonArray,
            columns: default_columns(),
            supports_resume_key: true,
        }
    }

    pub fn arquivo() -> Self {
        ArchiveEndpoint {
            name: "arquivo".into(),
            cdx_base: "https://arquivo.pt/wayback/cdx".into(),
            replay_template: "https://arquivo.pt/wayback/{timestamp}/{original}".into(),
            supports_digest: true,
            output: CdxOutput::JsonLines,
            columns: vec![
                CdxField::UrlKey,
                CdxField::Timestamp,
                CdxField::Original,
                CdxField::MimeType,
                CdxField::StatusCode,
                CdxField::Digest,
                CdxField::Length,
                CdxField::Offset,
                CdxField::Filename,
            ],
            supports_resume_key: false,
        }
    }

    pub fn validate(&self) -> Result<(), EndpointError> {
        let invalid = |reason: &str| EndpointError::Invalid {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(invalid("empty name"));
        }
        Url::parse(&self.cdx_base).map_err(|_| invalid("cdx_base is not an absolute URL"))?;
        if !self.replay_template.contains("{timestamp}") || !self.replay_template.contains("{original}") {
            return Err(invalid("replay_template needs {timestamp} and {original}"));
        }
        let ts = Timestamp::parse("20000101000000").expect("literal");
        Url::parse(&self.instantiate(&ts, "https://example.com/"))
            .map_err(|_| invalid("replay_template does not yield an absolute URL"))?;
        if self.columns.is_empty() {
            return Err(invalid("no column layout"));
        }
        Ok(())
    }

    pub fn instantiate(&self, timestamp: &Timestamp, original: &str) -> String {
        self.replay_template
            .replace("{timestamp}", &timestamp.to_string())
            .replace("{original}", original)
    }

    /// Static part of the replay URL before the timestamp.
    pub fn replay_base(&self) -> &str {
        let end = self.replay_template.find("{timestamp}").unwrap_or(0);
        &self.replay_template[..end]
    }

    /// Prefix every rewritten resource of a memento at `timestamp` carries.
    pub fn replay_prefix(&self, timestamp: &Timestamp) -> String {
        let end = self
            .replay_template
            .find("{original}")
            .unwrap_or(self.replay_template.len());
        self.replay_template[..end].replace("{timestamp}", &timestamp.to_string())
    }

    /// Host serving replays, used to keep redirect walks inside the archive.
    pub fn replay_host(&self) -> Option<String> {
        Url::parse(self.replay_base())
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
    }

    pub fn cdx_host(&self) -> Option<String> {
        Url::parse(&self.cdx_base)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
    }

    /// Split a URI-M of this endpoint into its timestamp and URI-R.
    /// Replay modifiers such as `im_` or `id_` after the timestamp are dropped.
    pub fn parse_urim(&self, urim: &str) -> Option<ParsedUrim> {
        let base = self.replay_base();
        let rest = strip_prefix_scheme_insensitive(urim, base)?;
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return None;
        }
        let after = &rest[digits.len()..];
        let slash = after.find('/')?;
        let modifier = &after[..slash];
        if !modifier.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return None;
        }
        let original = &after[slash + 1..];
        if original.is_empty() {
            return None;
        }
        // Short timestamps are legal in replay URLs; pad to the start of the period.
        if digits.len() < 4 {
            return None;
        }
        let mut padded: String = digits.chars().take(14).collect();
        if padded.len() < 14 {
            padded.push_str(&"00000101000000"[padded.len()..]);
        }
        let timestamp = Timestamp::parse(&padded).ok()?;
        Some(ParsedUrim {
            timestamp,
            modifier: modifier.to_string(),
            original: original.to_string(),
        })
    }
}

fn strip_prefix_scheme_insensitive<'a>(urim: &'a str, base: &str) -> Option<&'a str> {
    if let Some(r) = urim.strip_prefix(base) {
        return Some(r);
    }
    let strip = |s: &str| -> Option<usize> { s.find("://").map(|i| i + 3) };
    let (ui, bi) = (strip(urim)?, strip(base)?);
    urim[ui..].strip_prefix(&base[bi..])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedUrim {
    pub timestamp: Timestamp,
    pub modifier: String,
    pub original: String,
}

impl fmt::Display for ArchiveEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Named set of endpoints; names are unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointRegistry {
    endpoints: BTreeMap<String, ArchiveEndpoint>,
}

impl EndpointRegistry {
    pub fn new(endpoints: impl IntoIterator<Item = ArchiveEndpoint>) -> Result<Self, EndpointError> {
        let mut map = BTreeMap::new();
        for ep in endpoints {
            ep.validate()?;
            if map.contains_key(&ep.name) {
                return Err(EndpointError::Duplicate(ep.name));
            }
            map.insert(ep.name.clone(), ep);
        }
        if map.is_empty() {
            return Err(EndpointError::Empty);
        }
        Ok(EndpointRegistry { endpoints: map })
    }

    pub fn builtin() -> Self {
        Self::new([ArchiveEndpoint::wayback(), ArchiveEndpoint::arquivo()]).expect("builtin endpoints are valid")
    }

    pub fn get(&self, name: &str) -> Result<&ArchiveEndpoint, EndpointError> {
        self.endpoints
            .get(name)
            .ok_or_else(|| EndpointError::Unknown(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &ArchiveEndpoint> {
        self.endpoints.values()
    }

    /// Endpoint whose replay base prefixes `urim`.
    pub fn for_urim(&self, urim: &str) -> Option<&ArchiveEndpoint> {
        self.endpoints.values().find(|ep| ep.parse_urim(urim).is_some())
    }

    /// Hosts of every endpoint, for transport allowlists.
    pub fn archive_hosts(&self) -> Vec<String> {
        let mut hosts: Vec<String> = self
            .endpoints
            .values()
            .flat_map(|ep| [ep.cdx_host(), ep.replay_host()])
            .flatten()
            .collect();
        hosts.sort();
        hosts.dedup();
        hosts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    #[test]
    fn wayback_urim_shape() {
        let ep = ArchiveEndpoint::wayback();
        assert_eq!(
            ep.instantiate(&ts("20170214033011"), "https://www.instagram.com/beyonce/"),
            "https://web.archive.org/web/20170214033011/https://www.instagram.com/beyonce/"
        );
        assert_eq!(ep.replay_prefix(&ts("20170214033011")), "https://web.archive.org/web/20170214033011/");
    }

    #[test]
    fn arquivo_urim_uses_own_base() {
        let ep = ArchiveEndpoint::arquivo();
        let urim = ep.instantiate(&ts("20190903101010"), "https://www.instagram.com/katyperry/");
        assert!(urim.starts_with("https://arquivo.pt/wayback/"));
        assert_eq!(ep.parse_urim(&urim).unwrap().timestamp, ts("20190903101010"));
    }

    #[test]
    fn parse_urim_drops_modifiers() {
        let ep = ArchiveEndpoint::wayback();
        let p = ep
            .parse_urim("https://web.archive.org/web/20170214033011im_/https://scontent.cdninstagram.com/a.jpg")
            .unwrap();
        assert_eq!(p.modifier, "im_");
        assert_eq!(p.original, "https://scontent.cdninstagram.com/a.jpg");
        assert!(ep.parse_urim("https://web.archive.org/about/").is_none());
        assert!(ep.parse_urim("http://web.archive.org/web/20170214033011/x").is_some());
    }

    #[test]
    fn registry_rejects_duplicates_and_bad_templates() {
        assert!(matches!(
            EndpointRegistry::new([ArchiveEndpoint::wayback(), ArchiveEndpoint::wayback()]),
            Err(EndpointError::Duplicate(_))
        ));
        let mut bad = ArchiveEndpoint::wayback();
        bad.replay_template = "/web/{timestamp}/{original}".into();
        assert!(bad.validate().is_err());
        assert!(matches!(EndpointRegistry::new([]), Err(EndpointError::Empty)));
    }

    #[test]
    fn field_aliases() {
        assert_eq!(CdxField::from_name("mime"), CdxField::MimeType);
        assert_eq!(CdxField::from_name("url"), CdxField::Original);
        assert_eq!(CdxField::from_name("statuscode"), CdxField::StatusCode);
        assert!(!CdxField::from_name("collection").is_known());
    }
}
