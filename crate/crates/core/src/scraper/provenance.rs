//! Audit that every leaf of a scrape result occurs in the page source.

use serde_json::Value;

use super::model::ScrapeResult;
use super::normalize::UrlRewriter;

/// Leaves computed by the scraper rather than copied from the page.
const DERIVED: &[&str] = &[
    "urim",
    "scraped_at",
    "era",
    "created_time_iso",
    "status_code",
    "probe_error",
    "replaced_bytes",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub path: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path} = {value} does not occur in the page source")]
pub struct UntraceableValue {
    pub path: String,
    pub value: String,
}

/// Locate each non-derived leaf of `result` in `source`. Fails on the first one
/// that cannot be found.
pub fn audit(result: &ScrapeResult, source: &str, urls: &UrlRewriter) -> Result<Vec<SourceSpan>, UntraceableValue> {
    let doc = serde_json::to_value(result).expect("scrape results serialize");
    let mut spans = Vec::new();
    walk(&doc, String::new(), &mut |path, key, leaf| {
        if DERIVED.contains(&key) {
            return Ok(());
        }
        match find_leaf(key, leaf, source, urls) {
            Some((offset, len)) => {
                spans.push(SourceSpan {
                    path: path.to_string(),
                    offset,
                    len,
                });
                Ok(())
            }
            None => Err(UntraceableValue {
                path: path.to_string(),
                value: leaf.to_string(),
            }),
        }
    })?;
    Ok(spans)
}

fn walk<F>(v: &Value, path: String, f: &mut F) -> Result<(), UntraceableValue>
where
    F: FnMut(&str, &str, &Value) -> Result<(), UntraceableValue>,
{
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                if DERIVED.contains(&k.as_str()) {
                    continue;
                }
                walk(child, format!("{path}/{k}"), f)?;
            }
            Ok(())
        }
        Value::Array(a) => {
            for (i, child) in a.iter().enumerate() {
                walk(child, format!("{path}/{i}"), f)?;
            }
            Ok(())
        }
        leaf => {
            let key = path.rsplit('/').next().unwrap_or("");
            f(&path, key, leaf)
        }
    }
}

fn find_leaf(key: &str, leaf: &Value, source: &str, urls: &UrlRewriter) -> Option<(usize, usize)> {
    match leaf {
        Value::Null => Some((0, 0)),
        Value::Bool(b) => find_bounded(source, if *b { "true" } else { "false" }),
        Value::Number(n) => find_bounded(source, &n.to_string()),
        Value::String(s) => {
            if let Some(hit) = spellings(s).iter().find_map(|c| find_quoted(source, c)) {
                return Some(hit);
            }
            if key == "short_code" {
                // Early eras only carry the permalink.
                return spellings(&format!("/p/{s}")).iter().find_map(|c| source.find(c.as_str()).map(|o| (o, c.len())));
            }
            if let Some(rest) = s.strip_prefix(&urls.replay_prefix) {
                return url_forms(rest, urls)
                    .iter()
                    .flat_map(|u| spellings(u))
                    .find_map(|c| find_quoted(source, &c));
            }
            if let Some(rest) = archive_origin(&urls.replay_base).and_then(|o| s.strip_prefix(o.as_str())) {
                // Host-relative replay URL the rewriter made absolute.
                return spellings(rest).iter().find_map(|c| find_quoted(source, c));
            }
            if s.bytes().all(|b| b.is_ascii_digit()) && !s.is_empty() {
                return find_bounded(source, s);
            }
            None
        }
        _ => None,
    }
}

fn archive_origin(replay_base: &str) -> Option<String> {
    let u = url::Url::parse(replay_base).ok()?;
    Some(u.origin().ascii_serialization())
}

fn url_forms(u: &str, urls: &UrlRewriter) -> Vec<String> {
    let mut out = vec![u.to_string(), format!("{}{u}", urls.replay_prefix)];
    if let Some(rest) = u.strip_prefix("https://") {
        out.push(format!("//{rest}"));
    }
    if let Some(rest) = u.strip_prefix(&urls.page_origin) {
        out.push(rest.to_string());
    }
    out
}

/// Ways a JSON string value may be written in a page: raw, JSON-escaped,
/// with escaped solidus, and with non-ASCII as `\uXXXX` escapes.
fn spellings(s: &str) -> Vec<String> {
    let json = serde_json::to_string(s).expect("strings serialize");
    let json = json[1..json.len() - 1].to_string();
    let ascii = ascii_escape(&json);
    let mut out = vec![
        json.clone(),
        json.replace('/', "\\/"),
        ascii.clone(),
        ascii.replace('/', "\\/"),
        s.to_string(),
    ];
    out.dedup();
    out
}

fn ascii_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c.is_ascii() {
            out.push(c);
        } else {
            let mut buf = [0u16; 2];
            for unit in c.encode_utf16(&mut buf) {
                out.push_str(&format!("\\u{unit:04x}"));
            }
        }
    }
    out
}

fn find_quoted(source: &str, value: &str) -> Option<(usize, usize)> {
    let needle = format!("\"{value}\"");
    source.find(&needle).map(|o| (o + 1, value.len()))
}

/// An occurrence of a literal that is not part of a longer number or word.
fn find_bounded(source: &str, lit: &str) -> Option<(usize, usize)> {
    let bytes = source.as_bytes();
    let part = |b: u8| b.is_ascii_alphanumeric() || b == b'.' || b == b'_';
    let mut from = 0;
    while let Some(i) = source[from..].find(lit) {
        let start = from + i;
        let end = start + lit.len();
        let before_ok = start == 0 || !(part(bytes[start - 1]) || bytes[start - 1] == b'-');
        let after_ok = end == bytes.len() || !part(bytes[end]);
        if before_ok && after_ok {
            return Some((start, lit.len()));
        }
        from = start + 1;
    }
    None
}
