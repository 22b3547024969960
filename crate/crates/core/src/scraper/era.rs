use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ScrapeError;
use crate::time::Timestamp;

const BUILTIN_ERAS: &str = include_str!("eras.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl DateRange {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.from <= d && d <= self.to
    }

    /// Days from `d` to the nearest end of the range; 0 inside it.
    pub fn distance(&self, d: NaiveDate) -> i64 {
        if d < self.from {
            (self.from - d).num_days()
        } else if d > self.to {
            (d - self.to).num_days()
        } else {
            0
        }
    }
}

/// Textual markers a page source must (and must not) contain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    /// Script variable holding the embedded document.
    pub marker: String,
    #[serde(default)]
    pub requires: Vec<String>,
    #[serde(default)]
    pub forbids: Vec<String>,
}

impl Signature {
    pub fn matches(&self, html: &str) -> bool {
        html.contains(&self.marker)
            && self.requires.iter().all(|t| html.contains(t.as_str()))
            && !self.forbids.iter().any(|t| html.contains(t.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locator {
    /// JSON pointer from the document root.
    Pointer(String),
    /// First object, depth first, that has this key.
    FindKey(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileFields {
    pub username: String,
    pub bio: Option<String>,
    pub website: Option<String>,
    pub profile_picture: Option<String>,
    pub full_name: Option<String>,
    pub media: Option<String>,
    pub followed_by: Option<String>,
    pub follows: Option<String>,
    pub id: Option<String>,
    pub is_verified: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostFields {
    pub short_code: Option<String>,
    /// Alternative to `short_code`: a permalink of the form `.../p/{code}/`.
    pub short_code_link: Option<String>,
    pub caption: Option<String>,
    pub likes: Option<String>,
    pub comments: Option<String>,
    pub comments_disabled: Option<String>,
    pub created_time: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageField {
    pub variant: String,
    pub pointer: String,
}

/// An array of `{url_key, name_key}` objects, one image variant each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageList {
    pub pointer: String,
    pub url_key: String,
    pub name_key: String,
    #[serde(default)]
    pub prefix: String,
}

/// Where each canonical field lives in an era's embedded document.
/// Pointers under `profile_fields` are relative to the profile object,
/// post pointers to each post item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMap {
    pub container: Locator,
    #[serde(default)]
    pub profile: String,
    pub profile_fields: ProfileFields,
    #[serde(default)]
    pub profile_extra: BTreeMap<String, String>,
    pub posts: String,
    #[serde(default)]
    pub post_item: String,
    pub post_fields: PostFields,
    #[serde(default)]
    pub images: Vec<ImageField>,
    #[serde(default)]
    pub image_lists: Vec<ImageList>,
    #[serde(default)]
    pub post_extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageEra {
    pub id: String,
    pub timestamp_hint: DateRange,
    pub signature: Signature,
    pub extractor: FieldMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EraRegistry {
    eras: Vec<PageEra>,
}

impl EraRegistry {
    pub fn new(eras: Vec<PageEra>) -> Self {
        EraRegistry { eras }
    }

    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_ERAS).expect("bundled era table is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json).map(Self::new)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PageEra> {
        self.eras.iter()
    }

    pub fn get(&self, id: &str) -> Option<&PageEra> {
        self.eras.iter().find(|e| e.id == id)
    }

    /// Eras ordered by how well their date hint fits `timestamp`; registry
    /// order breaks ties.
    pub fn candidates(&self, timestamp: &Timestamp) -> Vec<&PageEra> {
        let d = timestamp.date();
        let mut out: Vec<&PageEra> = self.eras.iter().collect();
        out.sort_by_key(|e| e.timestamp_hint.distance(d));
        out
    }

    /// Earliest and latest dates covered by some hint, or None if the hints
    /// leave a gap between them.
    pub fn coverage(&self) -> Option<DateRange> {
        let mut ranges: Vec<DateRange> = self.eras.iter().map(|e| e.timestamp_hint).collect();
        ranges.sort_by_key(|r| r.from);
        let mut it = ranges.into_iter();
        let mut acc = it.next()?;
        for r in it {
            if r.from > acc.to.succ_opt()? {
                return None;
            }
            acc.to = acc.to.max(r.to);
        }
        Some(acc)
    }

    /// First era, in hint order, whose signature matches the page.
    pub fn detect(&self, html: &str, timestamp: &Timestamp) -> Result<&PageEra, ScrapeError> {
        let candidates = self.candidates(timestamp);
        if !html.trim().is_empty() {
            if let Some(era) = candidates.iter().find(|e| e.signature.matches(html)) {
                return Ok(era);
            }
        }
        Err(ScrapeError::UnsupportedFormat {
            attempted: candidates.iter().map(|e| e.id.clone()).collect(),
        })
    }
}

impl Default for EraRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> Timestamp {
        Timestamp::parse(s).unwrap()
    }

    #[test]
    fn builtin_hints_cover_the_window_without_gaps() {
        let cov = EraRegistry::builtin().coverage().unwrap();
        assert_eq!(cov.from, NaiveDate::from_ymd_opt(2012, 11, 7).unwrap());
        assert_eq!(cov.to, NaiveDate::from_ymd_opt(2018, 6, 8).unwrap());
    }

    #[test]
    fn candidates_put_matching_hint_first() {
        let reg = EraRegistry::builtin();
        assert_eq!(reg.candidates(&ts("20130601000000"))[0].id, "jscalls");
        assert_eq!(reg.candidates(&ts("20180520000000"))[0].id, "shared-data-graphql");
    }

    #[test]
    fn empty_page_lists_every_era() {
        let reg = EraRegistry::builtin();
        match reg.detect("", &ts("20170214033011")) {
            Err(ScrapeError::UnsupportedFormat { attempted }) => assert_eq!(attempted.len(), 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn signature_beats_date_hint() {
        let reg = EraRegistry::builtin();
        let html = r#"<script>window._sharedData = {"entry_data":{"ProfilePage":[{"user":{}}]}};</script>"#;
        // A 2013 timestamp still lands on the era whose markers are present.
        assert_eq!(reg.detect(html, &ts("20130601000000")).unwrap().id, "shared-data-profilepage");
    }
}
