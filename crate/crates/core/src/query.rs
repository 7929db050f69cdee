//! Query representation, catalog descriptors, and database selection.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::ExtractionRule;
use crate::text;

/// Placeholder replaced by the encoded keyword list in a search URL template.
pub const QUERY_PLACEHOLDER: &str = "{QUERY}";
/// Optional 1-based result page placeholder.
pub const PAGE_PLACEHOLDER: &str = "{PAGE}";

/// English articles, conjunctions and prepositions dropped from queries
/// unless a run supplies its own list.
pub const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "nor", "so", "yet", "for", "of", "in", "on", "at", "to",
    "by", "with", "from", "into", "onto", "upon", "about", "over", "under", "between", "during",
    "before", "after", "as", "than", "that", "this", "these", "those", "is", "are", "was", "were",
    "be", "been", "it", "its", "if", "then", "via",
];

pub fn default_stop_words() -> HashSet<String> {
    DEFAULT_STOP_WORDS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("query has no keywords after stop-word filtering")]
    EmptyQuery,
    #[error("no database in the catalog matches topics {0:?}")]
    NoDatabaseMatches(BTreeSet<String>),
    #[error("catalog is empty")]
    EmptyCatalog,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("reading catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing catalog: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("database {name:?}: {reason}")]
    Invalid { name: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub raw_text: String,
    pub keywords: Vec<String>,
    pub topics: BTreeSet<String>,
}

/// Splits `raw_text` into lowercase keywords, dropping stop-words and
/// duplicates while keeping first-occurrence order.
pub fn parse_query(
    raw_text: &str,
    topics: &BTreeSet<String>,
    stop_words: &HashSet<String>,
) -> Result<Query, QueryError> {
    let mut seen = HashSet::new();
    let keywords: Vec<String> = text::tokens(raw_text)
        .filter(|t| !stop_words.contains(t))
        .filter(|t| seen.insert(t.clone()))
        .collect();
    if keywords.is_empty() {
        return Err(QueryError::EmptyQuery);
    }
    Ok(Query {
        raw_text: raw_text.to_string(),
        keywords,
        topics: topics.clone(),
    })
}

/// One searchable database. The per-database behaviour lives entirely in
/// this data: URL template, harvesting pattern and extraction rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatabaseDescriptor {
    pub name: String,
    pub query_url_template: String,
    pub link_pattern: String,
    pub result_page_limit: u32,
    pub topic_tags: BTreeSet<String>,
    pub extraction_rules: Vec<ExtractionRule>,
    pub citation_pattern: String,
    pub rate_limit_ms: u64,
}

impl DatabaseDescriptor {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let invalid = |reason: String| CatalogError::Invalid {
            name: self.name.clone(),
            reason,
        };
        if self.name.trim().is_empty() {
            return Err(invalid("empty name".into()));
        }
        let placeholders = self.query_url_template.matches(QUERY_PLACEHOLDER).count();
        if placeholders != 1 {
            return Err(invalid(format!(
                "query_url_template must contain {QUERY_PLACEHOLDER} exactly once, found {placeholders}"
            )));
        }
        if let Err(e) = Regex::new(&self.link_pattern) {
            return Err(invalid(format!("link_pattern: {e}")));
        }
        match Regex::new(&self.citation_pattern) {
            Err(e) => return Err(invalid(format!("citation_pattern: {e}"))),
            Ok(re) if re.captures_len() < 2 => {
                return Err(invalid("citation_pattern has no capture group".into()))
            }
            Ok(_) => {}
        }
        if self.result_page_limit == 0 {
            return Err(invalid("result_page_limit must be positive".into()));
        }
        if self.topic_tags.is_empty() {
            return Err(invalid("topic_tags is empty".into()));
        }
        for rule in &self.extraction_rules {
            rule.validate().map_err(|e| invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn is_fixture(&self) -> bool {
        self.query_url_template.starts_with("file:")
    }
}

/// Parses and validates a catalog document (a JSON array of descriptors).
pub fn parse_catalog(json: &str) -> Result<Vec<DatabaseDescriptor>, CatalogError> {
    let catalog: Vec<DatabaseDescriptor> = serde_json::from_str(json)?;
    let mut names = HashSet::new();
    for d in &catalog {
        d.validate()?;
        if !names.insert(d.name.as_str()) {
            return Err(CatalogError::Invalid {
                name: d.name.clone(),
                reason: "duplicate database name".into(),
            });
        }
    }
    Ok(catalog)
}

pub fn load_catalog(path: &Path) -> Result<Vec<DatabaseDescriptor>, CatalogError> {
    let json = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_catalog(&json)
}

/// Keeps the descriptors whose tags intersect the query topics, in catalog
/// order. An empty topic set selects the whole catalog.
pub fn select_databases(
    query: &Query,
    catalog: &[DatabaseDescriptor],
) -> Result<Vec<DatabaseDescriptor>, QueryError> {
    if catalog.is_empty() {
        return Err(QueryError::EmptyCatalog);
    }
    if query.topics.is_empty() {
        return Ok(catalog.to_vec());
    }
    let selected: Vec<_> = catalog
        .iter()
        .filter(|d| !d.topic_tags.is_disjoint(&query.topics))
        .cloned()
        .collect();
    if selected.is_empty() {
        return Err(QueryError::NoDatabaseMatches(query.topics.clone()));
    }
    Ok(selected)
}
