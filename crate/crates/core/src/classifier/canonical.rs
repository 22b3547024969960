//! URI canonicalization and login-wall detection.

use url::Url;

use crate::cdx_client::CdxRecord;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a URL: {0:?}")]
pub struct ParseError(pub String);

/// Parse an absolute or scheme-less (`host/path`) URL.
pub fn parse_loose(uri: &str) -> Result<Url, ParseError> {
    let trimmed = uri.trim();
    if trimmed.is_empty() || trimmed.chars().any(char::is_whitespace) {
        return Err(ParseError(uri.to_string()));
    }
    let candidate = if has_scheme(trimmed) {
        trimmed.to_string()
    } else {
        format!("http://{trimmed}")
    };
    let url = Url::parse(&candidate).map_err(|_| ParseError(uri.to_string()))?;
    match (url.scheme(), url.host_str()) {
        ("http" | "https", Some(h)) if !h.is_empty() => Ok(url),
        _ => Err(ParseError(uri.to_string())),
    }
}

/// A leading `scheme://`. A replay path like `host/web/2019/http://x` has
/// none even though it contains `://`.
fn has_scheme(s: &str) -> bool {
    let Some(i) = s.find("://") else { return false };
    let scheme = &s[..i];
    scheme.starts_with(|c: char| c.is_ascii_alphabetic())
        && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

/// Decode escapes of unreserved characters and uppercase the hex of the rest.
/// Applying it twice gives the same result as once. Input is the ASCII
/// serialization produced by `url`.
fn normalize_escapes(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%'
            && i + 2 < bytes.len()
            && bytes[i + 1].is_ascii_hexdigit()
            && bytes[i + 2].is_ascii_hexdigit()
        {
            let hex = &s[i + 1..i + 3];
            if let Ok(v) = u8::from_str_radix(hex, 16) {
                if is_unreserved(v) {
                    out.push(v as char);
                } else {
                    out.push('%');
                    out.push_str(&hex.to_ascii_uppercase());
                }
                i += 3;
                continue;
            }
        }
        out.push(bytes[i] as char);
        i += 1;
    }
    out
}

fn strip_www(host: &str) -> &str {
    host.strip_prefix("www.").unwrap_or(host)
}

/// Scheme-less canonical form: lowercase host without `www.`, normalized
/// escapes, no trailing slash, query kept, fragment dropped.
pub fn canonicalize(uri: &str) -> Result<String, ParseError> {
    let url = parse_loose(uri)?;
    let host = url.host_str().unwrap_or("").to_ascii_lowercase();
    let mut out = String::from(strip_www(&host));
    if let Some(port) = url.port() {
        out.push_str(&format!(":{port}"));
    }
    let path = normalize_escapes(url.path());
    out.push_str(path.trim_end_matches('/'));
    if let Some(q) = url.query().filter(|q| !q.is_empty()) {
        out.push('?');
        out.push_str(&normalize_escapes(q));
    }
    Ok(out)
}

pub fn is_instagram_host(host: &str) -> bool {
    let host = host.to_ascii_lowercase();
    host == "instagram.com" || host.ends_with(".instagram.com")
}

/// Whether `uri` is Instagram's login page, in any scheme/host/slash/query variant.
pub fn is_login_uri(uri: &str) -> Result<bool, ParseError> {
    let url = parse_loose(uri)?;
    if !url.host_str().is_some_and(is_instagram_host) {
        return Ok(false);
    }
    let path = normalize_escapes(url.path()).to_ascii_lowercase();
    let path = path.trim_end_matches('/');
    Ok(path == "/accounts/login" || path.starts_with("/accounts/login/"))
}

/// Whether a redirect from `record.original` to `final_uri` only changed
/// the spelling of the same resource.
pub fn is_canonicalization_redirect(record: &CdxRecord, final_uri: &str) -> bool {
    same_resource(&record.original, final_uri)
}

pub fn same_resource(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (canonicalize(a), canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        let cases = [
            ("http://instagram.com/katyperry", "instagram.com/katyperry"),
            ("https://www.instagram.com/katyperry/", "instagram.com/katyperry"),
            ("HTTPS://WWW.Instagram.COM/katyperry//", "instagram.com/katyperry"),
            ("instagram.com/katyperry", "instagram.com/katyperry"),
            ("https://www.instagram.com/%6Bimkardashian/", "instagram.com/kimkardashian"),
            ("https://www.instagram.com/a%2fb/", "instagram.com/a%2Fb"),
            ("https://www.instagram.com/", "instagram.com"),
            ("https://www.instagram.com/x/?hl=en#top", "instagram.com/x?hl=en"),
            (
                "arquivo.pt/wayback/20121215081910/http://instagram.com/selenagomez",
                "arquivo.pt/wayback/20121215081910/http://instagram.com/selenagomez",
            ),
        ];
        for (input, want) in cases {
            assert_eq!(canonicalize(input).unwrap(), want, "{input}");
        }
    }

    #[test]
    fn login_variants() {
        let yes = [
            "https://www.instagram.com/accounts/login/?next=/beyonce/",
            "http://instagram.com/accounts/login",
            "https://instagram.com/accounts/login/",
            "www.instagram.com/accounts/login",
            "https://www.instagram.com/accounts/login/?hl=pt-br",
            "https://WWW.INSTAGRAM.COM/Accounts/Login/",
            "https://www.instagram.com/accounts/login/ajax/",
            "https://m.instagram.com/accounts/login/",
        ];
        let no = [
            "https://www.instagram.com/beyonce/",
            "https://www.instagram.com/accounts/loginx",
            "https://www.instagram.com/accounts/",
            "https://example.com/accounts/login/",
            "https://www.instagram.com/?next=/accounts/login/",
        ];
        for u in yes {
            assert!(is_login_uri(u).unwrap(), "{u}");
        }
        for u in no {
            assert!(!is_login_uri(u).unwrap(), "{u}");
        }
        assert!(is_login_uri("not a url").is_err());
        assert!(is_login_uri("").is_err());
    }
}
