//! Multi-database search: query URL formatting, page fetching with per-host
//! rate limiting, and regex link harvesting run concurrently per database.

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use log::{debug, warn};
use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::query::{DatabaseDescriptor, Query, PAGE_PLACEHOLDER, QUERY_PLACEHOLDER};
use crate::resolve::resolve;

pub const DEFAULT_USER_AGENT: &str = concat!("compile-search/", env!("CARGO_PKG_VERSION"));
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

/// RFC 3986 unreserved characters pass through; everything else is encoded.
const QUERY_ENCODE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Clone, PartialEq)]
pub struct FetchedPage {
    pub url: String,
    pub body: String,
    pub fetched_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSet {
    pub database_name: String,
    pub urls: Vec<String>,
    pub completed_at_seconds: f64,
}

/// A per-URL failure recorded during a run.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Diagnostic {
    pub url: String,
    pub reason: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FetchError {
    #[error("timed out fetching {url}")]
    Timeout { url: String },
    #[error("{url} not found")]
    NotFound { url: String },
    #[error("fetching {url} failed: {reason}")]
    Failed {
        url: String,
        status: Option<u16>,
        reason: String,
    },
}

impl FetchError {
    pub fn diagnostic(&self) -> Diagnostic {
        let (url, reason) = match self {
            FetchError::Timeout { url } => (url, "timeout".to_string()),
            FetchError::NotFound { url } => (url, "not found".to_string()),
            FetchError::Failed {
                url,
                status: Some(s),
                reason,
            } => (url, format!("status {s}: {reason}")),
            FetchError::Failed { url, reason, .. } => (url, reason.clone()),
        };
        Diagnostic {
            url: url.clone(),
            reason,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("invalid pattern {pattern:?}: {reason}")]
    InvalidPattern { pattern: String, reason: String },
}

pub(crate) fn compile(pattern: &str) -> Result<Regex, PatternError> {
    Regex::new(pattern).map_err(|e| PatternError::InvalidPattern {
        pattern: pattern.to_string(),
        reason: e.to_string(),
    })
}

/// Something that can retrieve a page. The pipeline only talks to this
/// trait, so tests can substitute slow or failing sources.
pub trait Fetch: Send + Sync {
    fn fetch(&self, url: &str, rate_limit_ms: u64) -> Result<FetchedPage, FetchError>;
}

/// Spaces consecutive request starts to the same host by at least the
/// requested interval.
#[derive(Debug, Default)]
pub struct RateLimiter {
    next_start: Mutex<HashMap<String, Duration>>,
}

impl RateLimiter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Blocks (through `clock`) until a request to `host` may start and
    /// returns the start time.
    pub fn acquire(&self, host: &str, interval: Duration, clock: &dyn Clock) -> Duration {
        let (start, wait) = {
            let mut slots = self.next_start.lock().unwrap();
            let now = clock.elapsed();
            let slot = slots.entry(host.to_string()).or_insert(now);
            let start = (*slot).max(now);
            *slot = start + interval;
            (start, start - now)
        };
        if !wait.is_zero() {
            clock.sleep(wait);
        }
        start
    }
}

fn host_key(url: &str) -> String {
    if url.starts_with("file:") {
        return "file".to_string();
    }
    match url::Url::parse(url) {
        Ok(u) => u.host_str().unwrap_or("").to_string(),
        Err(_) => url.split('/').next().unwrap_or("").to_string(),
    }
}

/// HTTP(S) and `file:` page fetcher.
///
/// Relative `file:` paths are read from `file_root`. The HTTP client is only
/// built on the first network fetch, so fixture runs never touch the network
/// stack.
pub struct Fetcher<'c> {
    file_root: PathBuf,
    user_agent: String,
    timeout_ms: u64,
    clock: &'c dyn Clock,
    limiter: RateLimiter,
    client: OnceLock<reqwest::blocking::Client>,
}

impl<'c> Fetcher<'c> {
    pub fn new(clock: &'c dyn Clock) -> Self {
        Self {
            file_root: PathBuf::from("."),
            user_agent: DEFAULT_USER_AGENT.to_string(),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            clock,
            limiter: RateLimiter::new(),
            client: OnceLock::new(),
        }
    }

    pub fn with_file_root(mut self, root: impl Into<PathBuf>) -> Self {
        self.file_root = root.into();
        self
    }

    pub fn with_user_agent(mut self, ua: impl Into<String>) -> Self {
        self.user_agent = ua.into();
        self
    }

    pub fn with_timeout_ms(mut self, timeout_ms: u64) -> Self {
        self.timeout_ms = timeout_ms;
        self
    }

    pub fn network_used(&self) -> bool {
        self.client.get().is_some()
    }

    pub fn fetch_page(
        &self,
        url: &str,
        rate_limit_ms: u64,
        timeout_ms: u64,
    ) -> Result<FetchedPage, FetchError> {
        self.limiter.acquire(
            &host_key(url),
            Duration::from_millis(rate_limit_ms),
            self.clock,
        );
        let body = match url.strip_prefix("file:") {
            Some(path) => self.read_file(url, path)?,
            None => self.get(url, timeout_ms)?,
        };
        debug!("fetched {url} ({} bytes)", body.len());
        Ok(FetchedPage {
            url: url.to_string(),
            body,
            fetched_at: self.clock.elapsed().as_secs_f64(),
        })
    }

    fn read_file(&self, url: &str, path: &str) -> Result<String, FetchError> {
        let path = path.split(['?', '#']).next().unwrap_or(path);
        let full = self.file_root.join(path);
        match std::fs::read(&full) {
            Ok(bytes) => Ok(String::from_utf8_lossy(&bytes).into_owned()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(FetchError::NotFound {
                url: url.to_string(),
            }),
            Err(e) => Err(FetchError::Failed {
                url: url.to_string(),
                status: None,
                reason: e.to_string(),
            }),
        }
    }

    fn get(&self, url: &str, timeout_ms: u64) -> Result<String, FetchError> {
        let failed = |e: reqwest::Error| {
            if e.is_timeout() {
                FetchError::Timeout {
                    url: url.to_string(),
                }
            } else {
                FetchError::Failed {
                    url: url.to_string(),
                    status: e.status().map(|s| s.as_u16()),
                    reason: e.to_string(),
                }
            }
        };
        let client = self.client.get_or_init(|| {
            reqwest::blocking::Client::builder()
                .user_agent(self.user_agent.clone())
                .build()
                .expect("http client")
        });
        let resp = client
            .get(url)
            .timeout(Duration::from_millis(timeout_ms))
            .send()
            .map_err(failed)?;
        let status = resp.status();
        if status == reqwest::StatusCode::NOT_FOUND {
            return Err(FetchError::NotFound {
                url: url.to_string(),
            });
        }
        if !status.is_success() {
            return Err(FetchError::Failed {
                url: url.to_string(),
                status: Some(status.as_u16()),
                reason: status.canonical_reason().unwrap_or("error").to_string(),
            });
        }
        let bytes = resp.bytes().map_err(failed)?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}

impl Fetch for Fetcher<'_> {
    fn fetch(&self, url: &str, rate_limit_ms: u64) -> Result<FetchedPage, FetchError> {
        self.fetch_page(url, rate_limit_ms, self.timeout_ms)
    }
}

fn encoded_keywords(query: &Query) -> String {
    query
        .keywords
        .iter()
        .map(|k| utf8_percent_encode(k, QUERY_ENCODE).to_string())
        .collect::<Vec<_>>()
        .join("+")
}

/// Substitutes the encoded, plus-joined keywords into the template.
pub fn format_search_url(descriptor: &DatabaseDescriptor, query: &Query) -> String {
    format_page_url(descriptor, query, 1)
}

/// Like [`format_search_url`], also filling the optional `{PAGE}` placeholder.
pub fn format_page_url(descriptor: &DatabaseDescriptor, query: &Query, page: u32) -> String {
    descriptor
        .query_url_template
        .replacen(QUERY_PLACEHOLDER, &encoded_keywords(query), 1)
        .replace(PAGE_PLACEHOLDER, &page.to_string())
}

fn capture_or_match<'h>(caps: &regex::Captures<'h>) -> Option<regex::Match<'h>> {
    caps.get(1).or_else(|| caps.get(0))
}

pub(crate) fn extract_links_with(body: &str, re: &Regex, base_url: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    re.captures_iter(body)
        .filter_map(|c| capture_or_match(&c))
        .filter_map(|m| resolve(base_url, m.as_str()))
        .filter(|u| seen.insert(u.clone()))
        .collect()
}

/// Harvests the first capture group of every match in document order,
/// resolved against `base_url` and deduplicated keeping first occurrence.
pub fn extract_links(
    page: &FetchedPage,
    link_pattern: &str,
    base_url: &str,
) -> Result<Vec<String>, PatternError> {
    let re = compile(link_pattern)?;
    Ok(extract_links_with(&page.body, &re, base_url))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsOutput {
    /// One per descriptor, in descriptor order.
    pub link_sets: Vec<LinkSet>,
    pub diagnostics: Vec<Diagnostic>,
    /// Databases for which no result page could be fetched at all.
    pub failed_databases: Vec<String>,
}

struct DatabaseHarvest {
    link_set: LinkSet,
    diagnostics: Vec<Diagnostic>,
    failed: bool,
}

fn harvest_database(
    query: &Query,
    descriptor: &DatabaseDescriptor,
    fetcher: &dyn Fetch,
    clock: &dyn Clock,
) -> DatabaseHarvest {
    let mut diagnostics = Vec::new();
    let mut urls = Vec::new();
    let mut seen = HashSet::new();
    let mut fetched_any = false;
    let mut hard_failure = false;

    let re = match compile(&descriptor.link_pattern) {
        Ok(re) => Some(re),
        Err(e) => {
            diagnostics.push(Diagnostic {
                url: format_search_url(descriptor, query),
                reason: e.to_string(),
            });
            hard_failure = true;
            None
        }
    };
    let paged = descriptor.query_url_template.contains(PAGE_PLACEHOLDER);
    let pages = if paged { descriptor.result_page_limit } else { 1 };

    if let Some(re) = re {
        for page_no in 1..=pages {
            let url = format_page_url(descriptor, query, page_no);
            match fetcher.fetch(&url, descriptor.rate_limit_ms) {
                Ok(page) => {
                    fetched_any = true;
                    let links = extract_links_with(&page.body, &re, &page.url);
                    if links.is_empty() {
                        break;
                    }
                    urls.extend(links.into_iter().filter(|u| seen.insert(u.clone())));
                }
                // past the last result page
                Err(FetchError::NotFound { .. }) if page_no > 1 => break,
                Err(e) => {
                    warn!("{}: {e}", descriptor.name);
                    if !matches!(e, FetchError::NotFound { .. }) {
                        hard_failure = true;
                    }
                    diagnostics.push(e.diagnostic());
                    break;
                }
            }
        }
    }

    DatabaseHarvest {
        link_set: LinkSet {
            database_name: descriptor.name.clone(),
            urls,
            completed_at_seconds: clock.elapsed().as_secs_f64(),
        },
        diagnostics,
        failed: hard_failure && !fetched_any,
    }
}

/// Runs every database's search concurrently. Output follows descriptor
/// order regardless of completion order; per-database failures degrade to
/// empty link sets.
pub fn run_mds(
    query: &Query,
    descriptors: &[DatabaseDescriptor],
    fetcher: &dyn Fetch,
    clock: &dyn Clock,
) -> MdsOutput {
    let harvests: Vec<DatabaseHarvest> = std::thread::scope(|s| {
        let handles: Vec<_> = descriptors
            .iter()
            .map(|d| s.spawn(move || harvest_database(query, d, fetcher, clock)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("database search thread panicked"))
            .collect()
    });

    let mut out = MdsOutput {
        link_sets: Vec::with_capacity(harvests.len()),
        diagnostics: Vec::new(),
        failed_databases: Vec::new(),
    };
    for h in harvests {
        if h.failed {
            out.failed_databases.push(h.link_set.database_name.clone());
        }
        out.diagnostics.extend(h.diagnostics);
        out.link_sets.push(h.link_set);
    }
    out
}
