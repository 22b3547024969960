use std::ops::Range;

use serde_json::Value;

use super::ScrapeError;

/// Byte ranges of `<script ...>` bodies. An unterminated script (capture cut
/// mid-page) runs to the end of the document.
pub fn script_bodies(html: &str) -> Vec<Range<usize>> {
    let lower = html.to_ascii_lowercase();
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(open) = lower[pos..].find("<script") {
        let tag_start = pos + open;
        let Some(gt) = lower[tag_start..].find('>') else {
            break;
        };
        let body_start = tag_start + gt + 1;
        let body_end = lower[body_start..]
            .find("</script")
            .map(|i| body_start + i)
            .unwrap_or(html.len());
        out.push(body_start..body_end);
        pos = body_end;
    }
    out
}

/// The embedded document assigned to `marker` inside a script block, as
/// found and without any normalization, plus its starting byte offset.
pub fn extract_embedded_json(html: &str, marker: &str) -> Result<(Value, usize), ScrapeError> {
    let scripts = script_bodies(html);
    if scripts.is_empty() {
        return Err(ScrapeError::EmptyDocument {
            reason: "page has no script blocks".into(),
        });
    }
    for body in scripts {
        let text = &html[body.clone()];
        let Some(at) = text.find(marker) else {
            continue;
        };
        let after = &text[at + marker.len()..];
        let trimmed = after.trim_start();
        let Some(rest) = trimmed.strip_prefix('=') else {
            continue;
        };
        let json_text = rest.trim_start();
        let start = body.start + at + marker.len() + (after.len() - json_text.len());
        // The document ends where the script does, never past it.
        let slice = &html[start..body.end];
        let mut stream = serde_json::Deserializer::from_str(slice).into_iter::<Value>();
        return match stream.next() {
            Some(Ok(v)) => Ok((v, start)),
            Some(Err(e)) => Err(ScrapeError::MalformedEmbeddedData {
                offset: start + offset_of(slice, e.line(), e.column()),
                reason: e.to_string(),
            }),
            None => Err(ScrapeError::MalformedEmbeddedData {
                offset: start,
                reason: "assignment without a value".into(),
            }),
        };
    }
    Err(ScrapeError::EmptyDocument {
        reason: format!("no script assigns {marker}"),
    })
}

/// Byte offset of a 1-based line/column position reported by the JSON parser.
fn offset_of(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_block_between_archive_markup() {
        let html = concat!(
            "<html><head><script src=\"/_static/js/wombat.js\"></script>",
            "<script>__wm.init(\"https://web.archive.org/web\");</script></head>",
            "<body><!-- BEGIN WAYBACK TOOLBAR INSERT --><div id=\"wm-ipp\"></div>",
            "<script type=\"text/javascript\">window._sharedData = {\"a\": [1, 2]};</script></body></html>"
        );
        let (v, off) = extract_embedded_json(html, "window._sharedData").unwrap();
        assert_eq!(v["a"][1], 2);
        assert_eq!(&html[off..off + 1], "{");
    }

    #[test]
    fn truncated_block_reports_offset_inside_it() {
        let html = "<script>window._sharedData = {\"entry_data\": {\"ProfilePage\": [{\"user\": {\"username\": \"bey";
        match extract_embedded_json(html, "window._sharedData") {
            Err(ScrapeError::MalformedEmbeddedData { offset, .. }) => {
                let start = html.find('{').unwrap();
                assert!(offset >= start && offset <= html.len(), "{offset}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn no_scripts_is_an_error() {
        assert!(matches!(
            extract_embedded_json("<html><body>hi</body></html>", "window._sharedData"),
            Err(ScrapeError::EmptyDocument { .. })
        ));
    }

    #[test]
    fn multiline_offset() {
        let t = "ab\ncd\nef";
        assert_eq!(offset_of(t, 1, 1), 0);
        assert_eq!(offset_of(t, 2, 2), 4);
        assert_eq!(offset_of(t, 3, 1), 6);
    }
}
