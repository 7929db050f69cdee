//! Tokenization and markup helpers shared by query parsing and scoring.

use std::borrow::Cow;

use regex::Regex;
use std::sync::OnceLock;

/// Lowercases a raw token and strips leading/trailing non-alphanumeric
/// characters. Interior punctuation (hyphens, ampersands) is kept.
///
/// Returns `None` when nothing survives the strip.
pub fn normalize_token(raw: &str) -> Option<String> {
    let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_lowercase())
    }
}

/// Whitespace-split, normalized tokens of `text`, in order.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().filter_map(normalize_token)
}

fn tag_regex() -> &'static Regex {
    static TAG: OnceLock<Regex> = OnceLock::new();
    TAG.get_or_init(|| {
        Regex::new(r"(?s)<!--.*?-->|<(?:script|style)\b[^>]*>.*?</(?:script|style)\s*>|</?[A-Za-z!][^<>]*>")
            .expect("static tag pattern")
    })
}

/// Replaces markup tags with spaces and decodes the handful of entities
/// that commonly appear in extracted text.
pub fn strip_markup(body: &str) -> Cow<'_, str> {
    let stripped = tag_regex().replace_all(body, " ");
    if !stripped.contains('&') {
        return stripped;
    }
    Cow::Owned(decode_entities(&stripped))
}

fn decode_entities(s: &str) -> String {
    s.replace("&nbsp;", " ")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&amp;", "&")
}

/// Collapses every run of whitespace into a single space and trims.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Escapes text for inclusion in HTML element content or attribute values.
pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}
