//! Source analysis and extraction: relevance and proximity scoring, and
//! rule-driven extraction of citations, images and text from each harvested
//! source.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::connector::{compile, Diagnostic, Fetch, LinkSet, PatternError};
use crate::query::{DatabaseDescriptor, Query};
use crate::resolve::resolve;
use crate::telemetry::TelemetryPoint;
use crate::text::{normalize_whitespace, strip_markup, tokens};

/// Sources scoring below this are dropped unless a run overrides it.
pub const DEFAULT_MIN_RELEVANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Image,
    Citation,
    Excerpt,
    Heading,
    FullText,
}

impl TargetKind {
    pub const ALL: [TargetKind; 5] = [
        TargetKind::Image,
        TargetKind::Citation,
        TargetKind::Excerpt,
        TargetKind::Heading,
        TargetKind::FullText,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::Image => "image",
            TargetKind::Citation => "citation",
            TargetKind::Excerpt => "excerpt",
            TargetKind::Heading => "heading",
            TargetKind::FullText => "full_text",
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TargetKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| format!("unknown extraction kind {s:?}"))
    }
}

/// Parses a comma-separated kind list such as `citation,excerpt,image`.
pub fn parse_kinds(list: &str) -> Result<BTreeSet<TargetKind>, String> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRule {
    pub target_kind: TargetKind,
    pub pattern: String,
    pub capture_group: usize,
    /// `None` means unlimited.
    #[serde(default)]
    pub max_matches: Option<usize>,
}

impl ExtractionRule {
    pub fn validate(&self) -> Result<(), PatternError> {
        let re = compile(&self.pattern)?;
        self.check_group(&re)
    }

    fn check_group(&self, re: &Regex) -> Result<(), PatternError> {
        let invalid = |reason: String| PatternError::InvalidPattern {
            pattern: self.pattern.clone(),
            reason,
        };
        if self.capture_group == 0 || self.capture_group >= re.captures_len() {
            return Err(invalid(format!("capture group {} does not exist", self.capture_group)));
        }
        if self.max_matches == Some(0) {
            return Err(invalid("max_matches must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Component {
    pub kind: TargetKind,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub url: String,
    pub database_name: String,
    pub relevance_score: f64,
    pub proximity_score: f64,
    pub components: Vec<Component>,
    pub citation: Option<String>,
}

impl SourceRecord {
    /// Report ordering score. Proximity lies in (0, 1] so it only separates
    /// sources with equal keyword counts.
    pub fn combined_score(&self) -> f64 {
        self.relevance_score + self.proximity_score
    }
}

/// How keyword occurrences are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchMode {
    /// Normalized tokens must equal the keyword.
    #[default]
    WholeWord,
    /// Any case-insensitive substring occurrence counts.
    Substring,
}

/// Sum over keywords of whole-word, case-insensitive occurrence counts.
pub fn relevance_score(body: &str, query: &Query) -> f64 {
    relevance_score_with(body, query, MatchMode::WholeWord)
}

pub fn relevance_score_with(body: &str, query: &Query, mode: MatchMode) -> f64 {
    let text = strip_markup(body);
    let count = match mode {
        MatchMode::WholeWord => {
            let keywords: HashSet<&str> = query.keywords.iter().map(String::as_str).collect();
            tokens(&text).filter(|t| keywords.contains(t.as_str())).count()
        }
        MatchMode::Substring => {
            let lower = text.to_lowercase();
            query
                .keywords
                .iter()
                .map(|k| lower.matches(k.as_str()).count())
                .sum()
        }
    };
    count as f64
}

/// `1 / w` where `w` is the token length of the smallest window holding
/// every keyword, or 0 when some keyword never occurs.
pub fn proximity_score(body: &str, query: &Query) -> f64 {
    let index: HashMap<&str, usize> = query
        .keywords
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let needed = index.len();
    if needed == 0 {
        return 0.0;
    }
    let hits: Vec<(usize, usize)> = tokens(&strip_markup(body))
        .enumerate()
        .filter_map(|(pos, t)| index.get(t.as_str()).map(|&k| (pos, k)))
        .collect();

    let mut counts = vec![0usize; needed];
    let mut covered = 0;
    let mut best: Option<usize> = None;
    let mut left = 0;
    for right in 0..hits.len() {
        let k = hits[right].1;
        counts[k] += 1;
        if counts[k] == 1 {
            covered += 1;
        }
        while covered == needed {
            let width = hits[right].0 - hits[left].0 + 1;
            best = Some(best.map_or(width, |b| b.min(width)));
            let lk = hits[left].1;
            counts[lk] -= 1;
            if counts[lk] == 0 {
                covered -= 1;
            }
            left += 1;
        }
    }
    best.map_or(0.0, |w| 1.0 / w as f64)
}

fn clean_text(raw: &str) -> String {
    normalize_whitespace(&strip_markup(raw))
}

fn apply_compiled(
    body: &str,
    rule: &ExtractionRule,
    re: &Regex,
    base_url: &str,
) -> Vec<Component> {
    let limit = rule.max_matches.unwrap_or(usize::MAX);
    re.captures_iter(body)
        .filter_map(|c| c.get(rule.capture_group))
        .filter_map(|m| match rule.target_kind {
            TargetKind::Image => resolve(base_url, m.as_str()),
            _ => Some(clean_text(m.as_str())).filter(|s| !s.is_empty()),
        })
        .take(limit)
        .map(|value| Component {
            kind: rule.target_kind,
            value,
        })
        .collect()
}

/// Applies one rule: up to `max_matches` capture values in document order.
/// Image values are resolved to absolute URLs, text values are stripped of
/// markup and whitespace-normalized.
pub fn apply_rule(
    body: &str,
    rule: &ExtractionRule,
    base_url: &str,
) -> Result<Vec<Component>, PatternError> {
    let re = compile(&rule.pattern)?;
    rule.check_group(&re)?;
    Ok(apply_compiled(body, rule, &re, base_url))
}

fn citation_with(body: &str, re: &Regex) -> Option<String> {
    let caps = re.captures(body)?;
    let text = clean_text(caps.get(1)?.as_str());
    (!text.is_empty()).then_some(text)
}

/// First match's first capture group, whitespace-normalized.
pub fn extract_citation(body: &str, citation_pattern: &str) -> Result<Option<String>, PatternError> {
    let re = compile(citation_pattern)?;
    if re.captures_len() < 2 {
        return Err(PatternError::InvalidPattern {
            pattern: citation_pattern.to_string(),
            reason: "no capture group".into(),
        });
    }
    Ok(citation_with(body, &re))
}

/// A descriptor's patterns compiled once for a whole database pass.
pub struct CompiledRules<'d> {
    descriptor: &'d DatabaseDescriptor,
    rules: Vec<(&'d ExtractionRule, Regex)>,
    citation: Regex,
}

impl<'d> CompiledRules<'d> {
    pub fn compile(descriptor: &'d DatabaseDescriptor) -> Result<Self, PatternError> {
        let rules = descriptor
            .extraction_rules
            .iter()
            .map(|r| {
                let re = compile(&r.pattern)?;
                r.check_group(&re)?;
                Ok((r, re))
            })
            .collect::<Result<Vec<_>, PatternError>>()?;
        let citation = compile(&descriptor.citation_pattern)?;
        if citation.captures_len() < 2 {
            return Err(PatternError::InvalidPattern {
                pattern: descriptor.citation_pattern.clone(),
                reason: "no capture group".into(),
            });
        }
        Ok(Self {
            descriptor,
            rules,
            citation,
        })
    }

    pub fn analyze(
        &self,
        url: &str,
        body: &str,
        query: &Query,
        requested: &BTreeSet<TargetKind>,
        min_relevance: f64,
    ) -> Option<SourceRecord> {
        let relevance = relevance_score(body, query);
        if relevance < min_relevance {
            return None;
        }
        let mut components: Vec<Component> = self
            .rules
            .iter()
            .filter(|(r, _)| requested.contains(&r.target_kind))
            .flat_map(|(r, re)| apply_compiled(body, r, re, url))
            .collect();
        let citation = citation_with(body, &self.citation);
        if let Some(c) = &citation {
            let present = components
                .iter()
                .any(|x| x.kind == TargetKind::Citation && &x.value == c);
            if requested.contains(&TargetKind::Citation) && !present {
                components.insert(
                    0,
                    Component {
                        kind: TargetKind::Citation,
                        value: c.clone(),
                    },
                );
            }
        }
        if components.is_empty() {
            return None;
        }
        Some(SourceRecord {
            url: url.to_string(),
            database_name: self.descriptor.name.clone(),
            relevance_score: relevance,
            proximity_score: proximity_score(body, query),
            components,
            citation,
        })
    }
}

/// Scores one fetched source and extracts the requested components.
/// `Ok(None)` means the source was filtered out.
pub fn analyze_source(
    page: &crate::connector::FetchedPage,
    descriptor: &DatabaseDescriptor,
    query: &Query,
    requested_kinds: &BTreeSet<TargetKind>,
    min_relevance: f64,
) -> Result<Option<SourceRecord>, PatternError> {
    let rules = CompiledRules::compile(descriptor)?;
    Ok(rules.analyze(&page.url, &page.body, query, requested_kinds, min_relevance))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaeaOutput {
    /// Ordered by database, then harvest order.
    pub records: Vec<SourceRecord>,
    /// One per link set, in link-set order.
    pub points: Vec<TelemetryPoint>,
    pub diagnostics: Vec<Diagnostic>,
    /// Bodies of the emitted records, keyed by URL.
    pub pages: BTreeMap<String, String>,
}

struct DatabasePass {
    records: Vec<SourceRecord>,
    point: TelemetryPoint,
    diagnostics: Vec<Diagnostic>,
    pages: Vec<(String, String)>,
}

fn analyze_database(
    link_set: &LinkSet,
    descriptor: Option<&DatabaseDescriptor>,
    query: &Query,
    requested: &BTreeSet<TargetKind>,
    min_relevance: f64,
    fetcher: &dyn Fetch,
    clock: &dyn Clock,
) -> DatabasePass {
    let mut pass = DatabasePass {
        records: Vec::new(),
        point: TelemetryPoint { t: 0.0, y: 0 },
        diagnostics: Vec::new(),
        pages: Vec::new(),
    };
    let rules = match descriptor.map(CompiledRules::compile) {
        Some(Ok(rules)) => Some(rules),
        Some(Err(e)) => {
            for url in &link_set.urls {
                pass.diagnostics.push(Diagnostic {
                    url: url.clone(),
                    reason: e.to_string(),
                });
            }
            None
        }
        None => {
            pass.diagnostics.push(Diagnostic {
                url: link_set.database_name.clone(),
                reason: "link set has no matching database descriptor".into(),
            });
            None
        }
    };
    if let Some(rules) = rules {
        let rate = rules.descriptor.rate_limit_ms;
        for url in &link_set.urls {
            match fetcher.fetch(url, rate) {
                Ok(page) => {
                    if let Some(rec) = rules.analyze(url, &page.body, query, requested, min_relevance)
                    {
                        pass.pages.push((rec.url.clone(), page.body));
                        pass.records.push(rec);
                    }
                }
                Err(e) => pass.diagnostics.push(e.diagnostic()),
            }
        }
    }
    pass.point = TelemetryPoint {
        t: clock.completion_seconds(&link_set.database_name),
        y: pass.records.len() as u64,
    };
    pass
}

/// Opens every harvested link, databases concurrently and links within a
/// database in harvest order, and records one completion point per
/// database.
pub fn run_saea(
    link_sets: &[LinkSet],
    descriptors: &[DatabaseDescriptor],
    query: &Query,
    requested_kinds: &BTreeSet<TargetKind>,
    min_relevance: f64,
    fetcher: &dyn Fetch,
    clock: &dyn Clock,
) -> SaeaOutput {
    let passes: Vec<DatabasePass> = std::thread::scope(|s| {
        let handles: Vec<_> = link_sets
            .iter()
            .map(|ls| {
                let d = descriptors.iter().find(|d| d.name == ls.database_name);
                s.spawn(move || {
                    analyze_database(ls, d, query, requested_kinds, min_relevance, fetcher, clock)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("source analysis thread panicked"))
            .collect()
    });

    let mut out = SaeaOutput {
        records: Vec::new(),
        points: Vec::new(),
        diagnostics: Vec::new(),
        pages: BTreeMap::new(),
    };
    for p in passes {
        out.records.extend(p.records);
        out.points.push(p.point);
        out.diagnostics.extend(p.diagnostics);
        out.pages.extend(p.pages);
    }
    out
}
