use std::collections::BTreeMap;

use serde_json::Value;

use super::era::{FieldMap, Locator, PageEra};
use super::model::{Counts, ImageResource, ImageRole, MediaPost, ProfileUser};
use super::ScrapeError;
use crate::time::iso_utc;

/// Rewrites source URLs into the archive namespace of one memento.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlRewriter {
    /// e.g. `https://web.archive.org/web/`.
    pub replay_base: String,
    /// e.g. `https://web.archive.org/web/20170214033011/`.
    pub replay_prefix: String,
    /// Origin assumed for host-relative source URLs.
    pub page_origin: String,
}

impl UrlRewriter {
    pub fn new(replay_base: impl Into<String>, replay_prefix: impl Into<String>) -> Self {
        UrlRewriter {
            replay_base: replay_base.into(),
            replay_prefix: replay_prefix.into(),
            page_origin: "https://www.instagram.com".into(),
        }
    }

    pub fn rewrite(&self, raw: &str) -> String {
        let raw = raw.trim();
        if raw.starts_with(&self.replay_base) {
            return raw.to_string();
        }
        if let Some(base_path) = path_of(&self.replay_base) {
            if raw.starts_with(base_path) {
                // Host-relative archive URL, as left by server-side rewriting.
                let origin = &self.replay_base[..self.replay_base.len() - base_path.len()];
                return format!("{origin}{raw}");
            }
        }
        if let Some(rest) = raw.strip_prefix("//") {
            return format!("{}https://{rest}", self.replay_prefix);
        }
        if raw.starts_with('/') {
            return format!("{}{}{raw}", self.replay_prefix, self.page_origin);
        }
        format!("{}{raw}", self.replay_prefix)
    }
}

fn path_of(url: &str) -> Option<&str> {
    let after = url.find("://")? + 3;
    let slash = url[after..].find('/')?;
    Some(&url[after + slash..])
}

fn join(base: &str, rel: &str) -> String {
    format!("{base}{rel}")
}

fn at<'a>(v: &'a Value, pointer: &str) -> Option<&'a Value> {
    if pointer.is_empty() {
        return Some(v);
    }
    v.pointer(pointer).filter(|x| !x.is_null())
}

fn violation(path: &str, reason: impl Into<String>) -> ScrapeError {
    ScrapeError::SchemaViolation {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn string_at(v: &Value, base: &str, pointer: &Option<String>) -> Result<Option<String>, ScrapeError> {
    let Some(p) = pointer else { return Ok(None) };
    match at(v, p) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => Err(violation(&join(base, p), format!("expected string, found {other}"))),
    }
}

fn count_at(v: &Value, base: &str, pointer: &Option<String>) -> Result<Option<u64>, ScrapeError> {
    let Some(p) = pointer else { return Ok(None) };
    match at(v, p) {
        None => Ok(None),
        Some(Value::Number(n)) => n
            .as_u64()
            .map(Some)
            .ok_or_else(|| violation(&join(base, p), format!("count must be a non-negative integer, found {n}"))),
        Some(Value::String(s)) if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) => s
            .parse()
            .map(Some)
            .map_err(|_| violation(&join(base, p), "count out of range")),
        Some(other) => Err(violation(&join(base, p), format!("expected count, found {other}"))),
    }
}

fn bool_at(v: &Value, base: &str, pointer: &Option<String>) -> Result<Option<bool>, ScrapeError> {
    let Some(p) = pointer else { return Ok(None) };
    match at(v, p) {
        None => Ok(None),
        Some(Value::Bool(b)) => Ok(Some(*b)),
        Some(other) => Err(violation(&join(base, p), format!("expected boolean, found {other}"))),
    }
}

fn unix_at(v: &Value, base: &str, pointer: &Option<String>) -> Result<Option<i64>, ScrapeError> {
    let Some(p) = pointer else { return Ok(None) };
    let secs = match at(v, p) {
        None => return Ok(None),
        Some(Value::Number(n)) => n.as_i64(),
        Some(Value::String(s)) => s.parse().ok(),
        Some(_) => None,
    };
    match secs {
        Some(s) if chrono::DateTime::from_timestamp(s, 0).is_some() => Ok(Some(s)),
        _ => Err(violation(&join(base, p), "not a UNIX timestamp")),
    }
}

fn id_at(v: &Value, base: &str, pointer: &Option<String>) -> Result<Option<String>, ScrapeError> {
    let Some(p) = pointer else { return Ok(None) };
    let id = match at(v, p) {
        None => return Ok(None),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) if n.is_u64() => n.to_string(),
        Some(other) => return Err(violation(&join(base, p), format!("expected id, found {other}"))),
    };
    if id.is_empty() || !id.bytes().all(|b| b.is_ascii_digit()) {
        return Err(violation(&join(base, p), format!("id {id:?} is not a digit string")));
    }
    Ok(Some(id))
}

fn extras(v: &Value, map: &BTreeMap<String, String>) -> BTreeMap<String, Value> {
    map.iter()
        .filter_map(|(k, p)| at(v, p).map(|x| (k.clone(), x.clone())))
        .collect()
}

pub fn is_shortcode(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// `https://instagram.com/p/BP-rXUGBPJa/` → `BP-rXUGBPJa`.
pub fn shortcode_from_link(link: &str) -> Option<&str> {
    let i = link.find("/p/")?;
    let rest = &link[i + 3..];
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let code = &rest[..end];
    is_shortcode(code).then_some(code)
}

fn locate<'a>(doc: &'a Value, loc: &Locator) -> Option<(&'a Value, String)> {
    match loc {
        Locator::Pointer(p) => at(doc, p).map(|v| (v, p.clone())),
        Locator::FindKey(k) => find_key(doc, k, String::new()),
    }
}

fn find_key<'a>(v: &'a Value, key: &str, path: String) -> Option<(&'a Value, String)> {
    match v {
        Value::Object(m) => {
            if m.contains_key(key) {
                return Some((v, path));
            }
            m.iter()
                .find_map(|(k, child)| find_key(child, key, format!("{path}/{}", escape_token(k))))
        }
        Value::Array(a) => a
            .iter()
            .enumerate()
            .find_map(|(i, child)| find_key(child, key, format!("{path}/{i}"))),
        _ => None,
    }
}

fn escape_token(k: &str) -> String {
    k.replace('~', "~0").replace('/', "~1")
}

/// Map an era's raw document onto the canonical profile and post types.
pub fn normalize(
    doc: &Value,
    era: &PageEra,
    urls: &UrlRewriter,
) -> Result<(ProfileUser, Vec<MediaPost>), ScrapeError> {
    let fm: &FieldMap = &era.extractor;
    let (container, cpath) = locate(doc, &fm.container).ok_or_else(|| ScrapeError::EmptyDocument {
        reason: format!("era {} found no profile container", era.id),
    })?;
    let ppath = join(&cpath, &fm.profile);
    let profile = at(container, &fm.profile).ok_or_else(|| ScrapeError::EmptyDocument {
        reason: format!("no profile object at {ppath}"),
    })?;
    let pf = &fm.profile_fields;

    let username = string_at(profile, &ppath, &Some(pf.username.clone()))?
        .filter(|u| !u.is_empty())
        .ok_or_else(|| violation(&join(&ppath, &pf.username), "username missing"))?;
    let nonempty = |s: Option<String>| s.filter(|x| !x.trim().is_empty());
    let user = ProfileUser {
        username,
        bio: string_at(profile, &ppath, &pf.bio)?,
        website: nonempty(string_at(profile, &ppath, &pf.website)?).map(|w| urls.rewrite(&w)),
        profile_picture: nonempty(string_at(profile, &ppath, &pf.profile_picture)?)
            .map(|u| ImageResource::new(urls.rewrite(&u), ImageRole::OtherVariant)),
        full_name: string_at(profile, &ppath, &pf.full_name)?,
        count: Counts {
            media: count_at(profile, &ppath, &pf.media)?,
            followed_by: count_at(profile, &ppath, &pf.followed_by)?,
            follows: count_at(profile, &ppath, &pf.follows)?,
        },
        id: id_at(profile, &ppath, &pf.id)?,
        is_verified: bool_at(profile, &ppath, &pf.is_verified)?,
        extra: extras(profile, &fm.profile_extra),
    };

    let posts_path = join(&cpath, &fm.posts);
    let items = match at(container, &fm.posts) {
        None => Vec::new(),
        Some(Value::Array(a)) => a.iter().collect(),
        Some(other) => return Err(violation(&posts_path, format!("expected post list, found {other}"))),
    };
    let mut posts = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let base = join(&format!("{posts_path}/{i}"), &fm.post_item);
        let node = at(item, &fm.post_item).ok_or_else(|| violation(&base, "post item missing"))?;
        posts.push(normalize_post(node, &base, fm, urls)?);
    }
    Ok((user, posts))
}

fn normalize_post(node: &Value, base: &str, fm: &FieldMap, urls: &UrlRewriter) -> Result<MediaPost, ScrapeError> {
    let f = &fm.post_fields;
    let short_code = match string_at(node, base, &f.short_code)? {
        Some(c) => c,
        None => {
            let link = string_at(node, base, &f.short_code_link)?
                .ok_or_else(|| violation(base, "post has no shortcode"))?;
            shortcode_from_link(&link)
                .map(str::to_string)
                .ok_or_else(|| violation(base, format!("no shortcode in link {link:?}")))?
        }
    };
    if !is_shortcode(&short_code) {
        return Err(violation(base, format!("bad shortcode {short_code:?}")));
    }
    let created_time = unix_at(node, base, &f.created_time)?;
    let created_time_iso = created_time
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0))
        .map(iso_utc);

    let mut images = BTreeMap::new();
    for img in &fm.images {
        if let Some(u) = string_at(node, base, &Some(img.pointer.clone()))?.filter(|u| !u.is_empty()) {
            images.insert(
                img.variant.clone(),
                ImageResource::new(urls.rewrite(&u), ImageRole::for_variant(&img.variant)),
            );
        }
    }
    for list in &fm.image_lists {
        let lpath = join(base, &list.pointer);
        let entries = match at(node, &list.pointer) {
            None => continue,
            Some(Value::Array(a)) => a,
            Some(other) => return Err(violation(&lpath, format!("expected image list, found {other}"))),
        };
        for (j, e) in entries.iter().enumerate() {
            let epath = format!("{lpath}/{j}");
            let Some(u) = string_at(e, &epath, &Some(format!("/{}", list.url_key)))? else {
                continue;
            };
            let name = match e.get(&list.name_key) {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => j.to_string(),
            };
            let variant = format!("{}{name}", list.prefix);
            images
                .entry(variant.clone())
                .or_insert_with(|| ImageResource::new(urls.rewrite(&u), ImageRole::for_variant(&variant)));
        }
    }

    Ok(MediaPost {
        short_code,
        caption: string_at(node, base, &f.caption)?,
        likes_count: count_at(node, base, &f.likes)?,
        comments_count: count_at(node, base, &f.comments)?,
        comments_disabled: bool_at(node, base, &f.comments_disabled)?,
        created_time,
        created_time_iso,
        images,
        extra: extras(node, &fm.post_extra),
    })
}
