//! CDX response parsing for the three encodings seen in the wild.

use serde_json::Value;

use super::endpoint::{ArchiveEndpoint, CdxField};
use super::record::{CdxRecord, CdxStatus};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed CDX row ({reason}): {row}")]
pub struct MalformedRow {
    pub row: String,
    pub reason: String,
}

/// Records of one response plus the key continuing the listing, if any.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CdxPage {
    pub records: Vec<CdxRecord>,
    pub resume_key: Option<String>,
}

pub fn parse_cdx_body(body: &str, endpoint: &ArchiveEndpoint) -> Result<CdxPage, MalformedRow> {
    let trimmed = body.trim_start_matches('\u{feff}').trim();
    if trimmed.is_empty() {
        return Ok(CdxPage::default());
    }
    match trimmed.as_bytes()[0] {
        b'[' => parse_json_array(trimmed, endpoint),
        b'{' => parse_json_lines(trimmed, endpoint),
        _ => parse_text(trimmed, endpoint),
    }
}

fn malformed(row: impl Into<String>, reason: impl Into<String>) -> MalformedRow {
    MalformedRow {
        row: row.into(),
        reason: reason.into(),
    }
}

fn looks_like_header(cells: &[String]) -> bool {
    !cells.is_empty()
        && cells.iter().all(|c| CdxField::from_name(c).is_known() || !c.bytes().any(|b| b.is_ascii_digit()))
        && cells.iter().any(|c| CdxField::from_name(c) == CdxField::Timestamp)
}

fn parse_json_array(body: &str, endpoint: &ArchiveEndpoint) -> Result<CdxPage, MalformedRow> {
    let value: Value = serde_json::from_str(body).map_err(|e| malformed(truncate(body), format!("invalid JSON: {e}")))?;
    let Value::Array(rows) = value else {
        return Err(malformed(truncate(body), "top-level JSON is not an array"));
    };
    let mut string_rows: Vec<(Vec<String>, String)> = Vec::with_capacity(rows.len());
    for row in &rows {
        let raw = row.to_string();
        let Value::Array(cells) = row else {
            return Err(malformed(raw, "row is not an array"));
        };
        let cells = cells
            .iter()
            .map(|c| match c {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                Value::Null => Ok("-".to_string()),
                _ => Err(malformed(raw.clone(), "cell is not a scalar")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        string_rows.push((cells, raw));
    }

    // A trailing `[]` followed by a single-cell row carries the resume key.
    let mut resume_key = None;
    if string_rows.len() >= 2 {
        let n = string_rows.len();
        if string_rows[n - 2].0.is_empty() && string_rows[n - 1].0.len() == 1 {
            resume_key = Some(string_rows[n - 1].0[0].clone());
            string_rows.truncate(n - 2);
        }
    }

    let mut iter = string_rows.into_iter().peekable();
    let columns = match iter.peek() {
        Some((cells, _)) if looks_like_header(cells) => {
            let header = iter.next().expect("peeked").0;
            header.iter().map(|c| CdxField::from_name(c)).collect()
        }
        _ => endpoint.columns.clone(),
    };
    let mut records = Vec::new();
    for (cells, raw) in iter {
        if cells.is_empty() {
            continue;
        }
        records.push(row_to_record(&columns, &cells, &raw, endpoint)?);
    }
    Ok(CdxPage { records, resume_key })
}

fn parse_json_lines(body: &str, endpoint: &ArchiveEndpoint) -> Result<CdxPage, MalformedRow> {
    let mut records = Vec::new();
    for line in body.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let value: Value = serde_json::from_str(line).map_err(|e| malformed(line, format!("invalid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(malformed(line, "line is not an object"));
        };
        let mut columns = Vec::with_capacity(map.len());
        let mut cells = Vec::with_capacity(map.len());
        for (k, v) in &map {
            columns.push(CdxField::from_name(k));
            cells.push(match v {
                Value::String(s) => s.clone(),
                Value::Null => "-".to_string(),
                other => other.to_string(),
            });
        }
        records.push(row_to_record(&columns, &cells, line, endpoint)?);
    }
    Ok(CdxPage {
        records,
        resume_key: None,
    })
}

fn parse_text(body: &str, endpoint: &ArchiveEndpoint) -> Result<CdxPage, MalformedRow> {
    let lines: Vec<&str> = body.lines().collect();
    // Paged text output ends with a blank line and the resume key.
    let mut resume_key = None;
    let mut end = lines.len();
    if end >= 2 && lines[end - 2].trim().is_empty() && !lines[end - 1].trim().contains(' ') {
        resume_key = Some(lines[end - 1].trim().to_string());
        end -= 2;
    }
    let mut iter = lines[..end].iter().map(|l| l.trim()).filter(|l| !l.is_empty()).peekable();
    let columns: Vec<CdxField> = match iter.peek() {
        Some(first) => {
            let cells: Vec<String> = first.split_whitespace().map(str::to_string).collect();
            if looks_like_header(&cells) {
                iter.next();
                cells.iter().map(|c| CdxField::from_name(c)).collect()
            } else {
                endpoint.columns.clone()
            }
        }
        None => endpoint.columns.clone(),
    };
    let mut records = Vec::new();
    for line in iter {
        let cells: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        records.push(row_to_record(&columns, &cells, line, endpoint)?);
    }
    Ok(CdxPage { records, resume_key })
}

fn row_to_record(
    columns: &[CdxField],
    cells: &[String],
    raw: &str,
    endpoint: &ArchiveEndpoint,
) -> Result<CdxRecord, MalformedRow> {
    if cells.len() != columns.len() {
        return Err(malformed(
            raw,
            format!("expected {} columns, found {}", columns.len(), cells.len()),
        ));
    }
    let get = |field: &CdxField| -> Option<&str> {
        columns
            .iter()
            .position(|c| c == field)
            .map(|i| cells[i].as_str())
    };
    let ts_raw = get(&CdxField::Timestamp).ok_or_else(|| malformed(raw, "no timestamp column"))?;
    let timestamp = Timestamp::parse(ts_raw).map_err(|e| malformed(raw, e.to_string()))?;
    let original = get(&CdxField::Original)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| malformed(raw, "no original URL"))?
        .to_string();
    let status_raw = get(&CdxField::StatusCode).ok_or_else(|| malformed(raw, "no status column"))?;
    let statuscode = CdxStatus::parse(status_raw).ok_or_else(|| malformed(raw, format!("bad status {status_raw:?}")))?;
    let mimetype = get(&CdxField::MimeType).unwrap_or("").to_string();
    let digest = if endpoint.supports_digest {
        get(&CdxField::Digest)
            .filter(|d| !d.is_empty() && *d != "-")
            .map(str::to_string)
    } else {
        None
    };
    Ok(CdxRecord {
        timestamp,
        original,
        mimetype,
        statuscode,
        digest,
        endpoint_name: endpoint.name.clone(),
    })
}

fn truncate(s: &str) -> String {
    s.chars().take(200).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdx_client::endpoint::CdxOutput;

    fn wayback() -> ArchiveEndpoint {
        ArchiveEndpoint::wayback()
    }

    #[test]
    fn json_array_with_header() {
        let body = r#"[["urlkey","timestamp","original","mimetype","statuscode","digest","length"],
            ["com,instagram)/beyonce","20170214033011","https://www.instagram.com/beyonce/","text/html","200","XYZ","1234"]]"#;
        let page = parse_cdx_body(body, &wayback()).unwrap();
        assert_eq!(page.records.len(), 1);
        let r = &page.records[0];
        assert_eq!(r.timestamp.to_string(), "20170214033011");
        assert_eq!(r.original, "https://www.instagram.com/beyonce/");
        assert_eq!(r.mimetype, "text/html");
        assert_eq!(r.statuscode.as_str(), "200");
        assert_eq!(r.digest.as_deref(), Some("XYZ"));
        assert_eq!(r.endpoint_name, "wayback");
        assert_eq!(page.resume_key, None);
    }

    #[test]
    fn header_order_is_honored() {
        let body = r#"[["statuscode","original","timestamp","digest","mimetype"],
            ["-","http://instagram.com/nike","20140101000000","AAA","warc/revisit"]]"#;
        let r = &parse_cdx_body(body, &wayback()).unwrap().records[0];
        assert!(r.is_revisit());
        assert_eq!(r.original, "http://instagram.com/nike");
        assert_eq!(r.digest.as_deref(), Some("AAA"));
    }

    #[test]
    fn resume_key_trailer() {
        let body = r#"[["urlkey","timestamp","original","mimetype","statuscode","digest","length"],
            ["k","20170214033011","https://www.instagram.com/nike/","text/html","200","D","1"],
            [],
            ["com%2Cinstagram%29%2Fnike+20170214033012"]]"#;
        let page = parse_cdx_body(body, &wayback()).unwrap();
        assert_eq!(page.records.len(), 1);
        assert_eq!(page.resume_key.as_deref(), Some("com%2Cinstagram%29%2Fnike+20170214033012"));
    }

    #[test]
    fn text_uses_declared_layout() {
        let body = "com,instagram)/nike 20150301000000 https://www.instagram.com/nike/ text/html 301 DDD 512\n";
        let r = &parse_cdx_body(body, &wayback()).unwrap().records[0];
        assert_eq!(r.statuscode.code(), Some(301));
        assert_eq!(r.digest.as_deref(), Some("DDD"));
    }

    #[test]
    fn json_lines_arquivo() {
        let body = r#"{"urlkey":"com,instagram)/katyperry","timestamp":"20190903101010","url":"https://www.instagram.com/katyperry/","mime":"text/html","status":"302","digest":"QQQ","length":"700","offset":"1","filename":"x.warc.gz"}"#;
        let mut ep = ArchiveEndpoint::arquivo();
        ep.output = CdxOutput::JsonLines;
        let r = &parse_cdx_body(body, &ep).unwrap().records[0];
        assert_eq!(r.original, "https://www.instagram.com/katyperry/");
        assert_eq!(r.statuscode.as_str(), "302");
        assert_eq!(r.endpoint_name, "arquivo");
    }

    #[test]
    fn empty_bodies() {
        assert!(parse_cdx_body("", &wayback()).unwrap().records.is_empty());
        assert!(parse_cdx_body("[]", &wayback()).unwrap().records.is_empty());
        assert!(parse_cdx_body("  \n", &wayback()).unwrap().records.is_empty());
    }

    #[test]
    fn malformed_rows_carry_raw_text() {
        let body = r#"[["urlkey","timestamp","original","mimetype","statuscode","digest","length"],
            ["k","2017021403","https://www.instagram.com/nike/","text/html","200","D","1"]]"#;
        let err = parse_cdx_body(body, &wayback()).unwrap_err();
        assert!(err.row.contains("2017021403"));
        let body = "k 20170214033011 https://x/ text/html\n";
        let err = parse_cdx_body(body, &wayback()).unwrap_err();
        assert!(err.row.contains("20170214033011"));
        let body = r#"[["k","20170214033011","https://x/","text/html","2O0","D","1"]]"#;
        assert!(parse_cdx_body(body, &wayback()).is_err());
    }

    #[test]
    fn digest_ignored_when_unsupported() {
        let mut ep = wayback();
        ep.supports_digest = false;
        let body = "k 20150301000000 https://www.instagram.com/nike/ text/html 200 DDD 512\n";
        assert_eq!(parse_cdx_body(body, &ep).unwrap().records[0].digest, None);
    }
}
