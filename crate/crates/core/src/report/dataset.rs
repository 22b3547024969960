use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

const TOP25: &str = include_str!("../../data/top25.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub handles: Vec<String>,
    pub source_note: String,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: duplicate handle {handle:?} (first on line {first})")]
    DuplicateHandle { handle: String, line: usize, first: usize },
    #[error("dataset {0:?} has no handles")]
    Empty(String),
}

/// Lowercase, drop a leading `@`, and accept profile URLs in place of handles.
pub fn normalize_handle(raw: &str) -> Result<String, String> {
    let mut h = raw.trim();
    if let Some(i) = h.find("instagram.com/") {
        h = h[i + "instagram.com/".len()..].split(['/', '?', '#']).next().unwrap_or("");
    }
    let h = h.trim_start_matches('@').to_lowercase();
    if h.is_empty() {
        return Err("empty handle".into());
    }
    if h.len() > 30 {
        return Err(format!("handle {h:?} longer than 30 characters"));
    }
    if let Some(c) = h.chars().find(|c| !(c.is_ascii_alphanumeric() || *c == '.' || *c == '_')) {
        return Err(format!("handle {h:?} contains {c:?}"));
    }
    Ok(h)
}

/// One handle per line; `#` starts a comment. Leading comment lines become
/// the source note.
pub fn parse_dataset(name: &str, text: &str) -> Result<Dataset, DatasetError> {
    let mut handles = Vec::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();
    let mut note = Vec::new();
    let mut in_header = true;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let (content, comment) = match line.split_once('#') {
            Some((c, rest)) => (c, Some(rest.trim())),
            None => (line, None),
        };
        if content.trim().is_empty() {
            if in_header {
                note.extend(comment.filter(|c| !c.is_empty()).map(str::to_string));
            }
            continue;
        }
        in_header = false;
        let handle = normalize_handle(content).map_err(|reason| DatasetError::Parse { line: lineno, reason })?;
        if let Some(&first) = first_line.get(&handle) {
            return Err(DatasetError::DuplicateHandle {
                handle,
                line: lineno,
                first,
            });
        }
        first_line.insert(handle.clone(), lineno);
        handles.push(handle);
    }
    if handles.is_empty() {
        return Err(DatasetError::Empty(name.to_string()));
    }
    Ok(Dataset {
        name: name.to_string(),
        handles,
        source_note: note.join("\n"),
    })
}

/// Read a dataset file; its name is the file stem.
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_dataset(&name, &text)
}

/// The bundled top-25 seed list.
pub fn top25() -> Dataset {
    parse_dataset("top25", TOP25).expect("bundled dataset is valid")
}

/// A bundled dataset name, or else a path on disk.
pub fn resolve_dataset(spec: &str) -> Result<Dataset, DatasetError> {
    match spec {
        "top25" => Ok(top25()),
        path => load_dataset(Path::new(path)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_top25() {
        let d = top25();
        assert_eq!(d.handles.len(), 25);
        assert_eq!(d.handles[0], "instagram");
        assert!(d.handles.contains(&"virat.kohli".to_string()));
        assert!(!d.source_note.is_empty());
    }

    #[test]
    fn normalization_table() {
        for (raw, want) in [
            ("KatyPerry", "katyperry"),
            ("@beyonce", "beyonce"),
            ("  NatGeo  ", "natgeo"),
            ("https://www.instagram.com/Nike/", "nike"),
            ("instagram.com/virat.kohli?hl=en", "virat.kohli"),
        ] {
            assert_eq!(normalize_handle(raw).unwrap(), want, "{raw}");
        }
        assert!(normalize_handle("bad handle").is_err());
        assert!(normalize_handle("@").is_err());
    }

    #[test]
    fn duplicate_reports_both_lines() {
        match parse_dataset("x", "beyonce\nnike\nBeyonce # again\n") {
            Err(DatasetError::DuplicateHandle { handle, line, first }) => {
                assert_eq!((handle.as_str(), line, first), ("beyonce", 3, 1))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_carries_line() {
        match parse_dataset("x", "# note\nbeyonce\nno way\n") {
            Err(DatasetError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
