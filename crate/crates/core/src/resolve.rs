//! Resolution of harvested hrefs against the page they were found on.
//!
//! `http(s)` bases go through [`url::Url::join`]. `file:` fixture URLs and
//! scheme-less bases are joined textually so relative fixture paths stay
//! relative to the corpus root.

use url::Url;

fn has_scheme(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    for c in chars {
        match c {
            ':' => return true,
            c if c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.') => {}
            _ => return false,
        }
    }
    false
}

fn strip_fragment(s: &str) -> &str {
    s.split('#').next().unwrap_or(s)
}

/// Removes `.` and `..` segments from a slash-separated path.
fn normalize_path(path: &str) -> String {
    let absolute = path.starts_with('/');
    let mut out: Vec<&str> = Vec::new();
    for seg in path.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                if matches!(out.last(), Some(s) if *s != "..") {
                    out.pop();
                } else if !absolute {
                    out.push("..");
                }
            }
            s => out.push(s),
        }
    }
    let mut joined = out.join("/");
    if absolute {
        joined.insert(0, '/');
    }
    if path.ends_with('/') && !joined.is_empty() && !joined.ends_with('/') {
        joined.push('/');
    }
    joined
}

fn join_textual(prefix: &str, base_path: &str, link: &str, root_is_host: bool) -> String {
    let base_path = base_path.split(['?', '#']).next().unwrap_or(base_path);
    if let Some(rest) = link.strip_prefix('/') {
        if root_is_host {
            let host = base_path.split('/').next().unwrap_or("");
            return format!("{prefix}{host}/{}", normalize_path(rest));
        }
        return format!("{prefix}{}", normalize_path(link));
    }
    let dir = match base_path.rfind('/') {
        Some(i) => &base_path[..=i],
        None if root_is_host => return format!("{prefix}{base_path}/{}", normalize_path(link)),
        None => "",
    };
    if root_is_host {
        // keep the host segment out of dot-segment removal
        let (host, path) = dir.split_once('/').unwrap_or((dir, ""));
        format!("{prefix}{host}/{}", normalize_path(&format!("{path}{link}")))
    } else {
        format!("{prefix}{}", normalize_path(&format!("{dir}{link}")))
    }
}

/// Resolves `link` against `base`, dropping any fragment.
///
/// Returns `None` for links that cannot be resolved (malformed http bases).
pub fn resolve(base: &str, link: &str) -> Option<String> {
    let link = strip_fragment(link.trim());
    if link.is_empty() {
        return None;
    }
    if has_scheme(link) {
        return Some(link.to_string());
    }
    if base.starts_with("http://") || base.starts_with("https://") {
        let mut joined = Url::parse(base).ok()?.join(link).ok()?;
        joined.set_fragment(None);
        return Some(joined.into());
    }
    if let Some(path) = base.strip_prefix("file:") {
        return Some(join_textual("file:", path, link, false));
    }
    if let Some(rest) = link.strip_prefix("//") {
        return Some(rest.to_string());
    }
    Some(join_textual("", base, link, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_less_base() {
        assert_eq!(resolve("db.example", "/doc/1").unwrap(), "db.example/doc/1");
        assert_eq!(
            resolve("db.example/search?q=x", "doc/2").unwrap(),
            "db.example/doc/2"
        );
        assert_eq!(
            resolve("db.example/a/b/list.html", "../c.html").unwrap(),
            "db.example/a/c.html"
        );
    }

    #[test]
    fn http_base() {
        assert_eq!(
            resolve("https://avalon.law.yale.edu/subject_menus/x.asp", "../18th_century/a.asp#top")
                .unwrap(),
            "https://avalon.law.yale.edu/18th_century/a.asp"
        );
        assert_eq!(
            resolve("https://a.example/x", "https://b.example/y").unwrap(),
            "https://b.example/y"
        );
    }

    #[test]
    fn file_base() {
        assert_eq!(
            resolve("file:ew/search/christopher+columbus/page-1.html", "../../docs/c-001.html")
                .unwrap(),
            "file:ew/docs/c-001.html"
        );
        assert_eq!(
            resolve("file:ew/docs/c-001.html", "c-002.html").unwrap(),
            "file:ew/docs/c-002.html"
        );
        assert_eq!(resolve("file:/srv/x/a.html", "b.html").unwrap(), "file:/srv/x/b.html");
    }

    #[test]
    fn empty_and_fragment_only() {
        assert_eq!(resolve("db.example", ""), None);
        assert_eq!(resolve("db.example", "#top"), None);
    }
}
