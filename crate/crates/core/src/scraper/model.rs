use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageRole {
    #[default]
    Display,
    Thumbnail,
    OtherVariant,
}

impl ImageRole {
    pub fn for_variant(name: &str) -> Self {
        match name {
            "display" => ImageRole::Display,
            "thumbnail" => ImageRole::Thumbnail,
            _ => ImageRole::OtherVariant,
        }
    }
}

/// An archived image URL and, when probed, the status the archive answered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageResource {
    pub uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status_code: Option<u16>,
    #[serde(skip)]
    pub role: ImageRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_error: Option<String>,
}

impl ImageResource {
    pub fn new(uri: impl Into<String>, role: ImageRole) -> Self {
        ImageResource {
            uri: uri.into(),
            status_code: None,
            role,
            probe_error: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followed_by: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follows: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileUser {
    pub username: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bio: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub website: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_picture: Option<ImageResource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_name: Option<String>,
    #[serde(default)]
    pub count: Counts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(rename = "isVerified", default, skip_serializing_if = "Option::is_none")]
    pub is_verified: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, Value>,
}

/// One post as found in the page source.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "wire::MediaPostWire", try_from = "wire::MediaPostWire")]
pub struct MediaPost {
    pub short_code: String,
    pub caption: Option<String>,
    pub likes_count: Option<u64>,
    pub comments_count: Option<u64>,
    pub comments_disabled: Option<bool>,
    pub created_time: Option<i64>,
    pub created_time_iso: Option<String>,
    /// Variant name (`display`, `thumbnail`, `thumbnail_150`, ...) to image.
    pub images: BTreeMap<String, ImageResource>,
    pub extra: BTreeMap<String, Value>,
}

mod wire {
    use super::*;

    #[derive(Serialize, Deserialize)]
    pub struct CountBox {
        pub count: u64,
    }

    #[derive(Serialize, Deserialize)]
    pub struct TextBox {
        pub text: String,
    }

    #[derive(Serialize, Deserialize)]
    pub struct ImageEntry {
        pub url: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub status_code: Option<u16>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub probe_error: Option<String>,
    }

    #[derive(Serialize, Deserialize)]
    pub struct MediaPostWire {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub comments_disabled: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub comments: Option<CountBox>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub caption: Option<TextBox>,
        pub short_code: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub likes: Option<CountBox>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub created_time: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub created_time_iso: Option<String>,
        #[serde(default)]
        pub images: BTreeMap<String, ImageEntry>,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        pub extra: BTreeMap<String, Value>,
    }

    impl From<MediaPost> for MediaPostWire {
        fn from(p: MediaPost) -> Self {
            MediaPostWire {
                comments_disabled: p.comments_disabled,
                comments: p.comments_count.map(|count| CountBox { count }),
                caption: p.caption.map(|text| TextBox { text }),
                short_code: p.short_code,
                likes: p.likes_count.map(|count| CountBox { count }),
                created_time: p.created_time,
                created_time_iso: p.created_time_iso,
                images: p
                    .images
                    .into_iter()
                    .map(|(k, img)| {
                        (
                            k,
                            ImageEntry {
                                url: img.uri,
                                status_code: img.status_code,
                                probe_error: img.probe_error,
                            },
                        )
                    })
                    .collect(),
                extra: p.extra,
            }
        }
    }

    impl TryFrom<MediaPostWire> for MediaPost {
        type Error = String;

        fn try_from(w: MediaPostWire) -> Result<Self, Self::Error> {
            Ok(MediaPost {
                short_code: w.short_code,
                caption: w.caption.map(|c| c.text),
                likes_count: w.likes.map(|c| c.count),
                comments_count: w.comments.map(|c| c.count),
                comments_disabled: w.comments_disabled,
                created_time: w.created_time,
                created_time_iso: w.created_time_iso,
                images: w
                    .images
                    .into_iter()
                    .map(|(k, e)| {
                        let role = ImageRole::for_variant(&k);
                        (
                            k,
                            ImageResource {
                                uri: e.url,
                                status_code: e.status_code,
                                role,
                                probe_error: e.probe_error,
                            },
                        )
                    })
                    .collect(),
                extra: w.extra,
            })
        }
    }
}

/// Everything recovered from one account-page memento.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScrapeResult {
    pub urim: String,
    /// When the page body was fetched from the archive.
    pub scraped_at: DateTime<Utc>,
    pub era: String,
    #[serde(rename = "profileUser")]
    pub profile_user: ProfileUser,
    #[serde(rename = "userMedia")]
    pub user_media: Vec<MediaPost>,
    /// Bytes of the page that were not valid UTF-8 and were replaced.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub replaced_bytes: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl ScrapeResult {
    /// Capture timestamp, taken from the first 14-digit path segment of the URI-M.
    pub fn memento_timestamp(&self) -> Option<crate::time::Timestamp> {
        memento_timestamp_of(&self.urim)
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageResource> {
        self.profile_user
            .profile_picture
            .iter()
            .chain(self.user_media.iter().flat_map(|p| p.images.values()))
    }

    pub fn images_mut(&mut self) -> Vec<&mut ImageResource> {
        let mut out: Vec<&mut ImageResource> = Vec::new();
        if let Some(p) = self.profile_user.profile_picture.as_mut() {
            out.push(p);
        }
        for post in &mut self.user_media {
            out.extend(post.images.values_mut());
        }
        out
    }

    /// `{handle}_{timestamp}.json`.
    pub fn file_name(&self) -> String {
        let ts = self
            .memento_timestamp()
            .map(|t| t.to_string())
            .unwrap_or_else(|| "unknown".into());
        let handle: String = self
            .profile_user
            .username
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '_' { c } else { '_' })
            .collect();
        format!("{handle}_{ts}.json")
    }
}

pub fn memento_timestamp_of(urim: &str) -> Option<crate::time::Timestamp> {
    let after_scheme = urim.split_once("://").map(|(_, r)| r).unwrap_or(urim);
    after_scheme.split('/').skip(1).find_map(|seg| {
        let digits: String = seg.chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.len() == 14 {
            crate::time::Timestamp::parse(&digits).ok()
        } else {
            None
        }
    })
}
