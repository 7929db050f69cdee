//! End-to-end driver: query, search, analysis, ranking, telemetry, report.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::Deserialize;
use thiserror::Error;

use crate::clock::{Clock, ReplayClock, SystemClock, TimingSchedule};
use crate::connector::{run_mds, Fetcher, DEFAULT_TIMEOUT_MS, DEFAULT_USER_AGENT};
use crate::extract::{run_saea, TargetKind, DEFAULT_MIN_RELEVANCE};
use crate::pagerank::{
    build_link_graph, pagerank, DEFAULT_DAMPING, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use crate::query::{
    default_stop_words, load_catalog, parse_query, select_databases, CatalogError, DatabaseDescriptor,
    QueryError,
};
use crate::report::{order_records, render_html, render_json, render_svg, CompiledReport};
use crate::telemetry::{run_metrics, RunMetrics};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ALL_FAILED: i32 = 3;

/// Environment variable overriding the fetch User-Agent.
pub const USER_AGENT_ENV: &str = "COMPSEARCH_USER_AGENT";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("timing replay names unknown database {0:?}")]
    UnknownDatabase(String),
    #[error("timing replay {path}: {reason}")]
    Replay { path: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Live,
    Fixture,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub query_text: String,
    pub topics: BTreeSet<String>,
    pub catalog_path: PathBuf,
    pub extract_kinds: BTreeSet<TargetKind>,
    pub min_relevance: f64,
    pub damping: f64,
    /// Reports go to `<out>.html` and `<out>.json`.
    pub out_path: PathBuf,
    pub mode: Mode,
    pub fixture_timing_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
    pub timeout_ms: u64,
    pub user_agent: String,
    pub stop_words: HashSet<String>,
    /// Overrides the report timestamp.
    pub generated_at: Option<String>,
}

impl RunConfig {
    pub fn new(query_text: impl Into<String>, catalog_path: impl Into<PathBuf>) -> Self {
        Self {
            query_text: query_text.into(),
            topics: BTreeSet::new(),
            catalog_path: catalog_path.into(),
            extract_kinds: [TargetKind::Citation, TargetKind::Excerpt].into_iter().collect(),
            min_relevance: DEFAULT_MIN_RELEVANCE,
            damping: DEFAULT_DAMPING,
            out_path: PathBuf::from("report"),
            mode: Mode::Fixture,
            fixture_timing_path: None,
            plot_path: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            user_agent: DEFAULT_USER_AGENT.to_string(),
            stop_words: default_stop_words(),
            generated_at: None,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(HarnessError::Config(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if !(self.min_relevance >= 0.0) {
            return Err(HarnessError::Config(format!(
                "min-relevance must be non-negative, got {}",
                self.min_relevance
            )));
        }
        if self.timeout_ms == 0 {
            return Err(HarnessError::Config("timeout must be positive".into()));
        }
        if self.extract_kinds.is_empty() {
            return Err(HarnessError::Config("no extraction kinds requested".into()));
        }
        Ok(())
    }

    pub fn html_path(&self) -> PathBuf {
        with_suffix(&self.out_path, "html")
    }

    pub fn json_path(&self) -> PathBuf {
        with_suffix(&self.out_path, "json")
    }
}

fn with_suffix(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

#[derive(Deserialize)]
struct TimingEntry {
    database: String,
    completion_seconds: f64,
}

/// Parses a timing replay document: a JSON array of
/// `{"database": <name>, "completion_seconds": <t>}`. Blank input or an
/// empty array yields `None`.
pub fn parse_timings(
    json: &str,
    catalog: &[DatabaseDescriptor],
) -> Result<Option<TimingSchedule>, HarnessError> {
    let replay_err = |reason: String| HarnessError::Replay {
        path: "<input>".into(),
        reason,
    };
    if json.trim().is_empty() {
        return Ok(None);
    }
    let entries: Vec<TimingEntry> =
        serde_json::from_str(json).map_err(|e| replay_err(e.to_string()))?;
    if entries.is_empty() {
        return Ok(None);
    }
    let mut schedule = TimingSchedule::new();
    for e in entries {
        if !catalog.iter().any(|d| d.name == e.database) {
            return Err(HarnessError::UnknownDatabase(e.database));
        }
        if !(e.completion_seconds.is_finite() && e.completion_seconds > 0.0) {
            return Err(replay_err(format!(
                "completion time for {} must be positive",
                e.database
            )));
        }
        if schedule.insert(e.database.clone(), e.completion_seconds).is_some() {
            return Err(replay_err(format!("{} listed twice", e.database)));
        }
    }
    Ok(Some(schedule))
}

/// Loads a timing replay file. `None` means the live clock should be used.
pub fn replay_timings(
    path: &Path,
    catalog: &[DatabaseDescriptor],
) -> Result<Option<TimingSchedule>, HarnessError> {
    let json = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_timings(&json, catalog).map_err(|e| match e {
        HarnessError::Replay { reason, .. } => HarnessError::Replay {
            path: path.display().to_string(),
            reason,
        },
        other => other,
    })
}

/// Everything a run produces before anything is written to disk.
#[derive(Debug, Clone)]
pub struct CompiledRun {
    pub report: CompiledReport,
    pub all_failed: bool,
    pub network_used: bool,
}

impl CompiledRun {
    pub fn exit_code(&self) -> i32 {
        if self.all_failed {
            EXIT_ALL_FAILED
        } else {
            EXIT_OK
        }
    }
}

fn generated_at(config: &RunConfig) -> String {
    if let Some(ts) = &config.generated_at {
        return ts.clone();
    }
    let now = match config.mode {
        Mode::Live => chrono::Utc::now(),
        // fixture runs must be reproducible byte for byte
        Mode::Fixture => std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|s| s.trim().parse::<i64>().ok())
            .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
            .unwrap_or_default(),
    };
    now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Runs the whole pipeline and returns the compiled report.
pub fn compile_run(config: &RunConfig) -> Result<CompiledRun, HarnessError> {
    config.validate()?;
    let catalog = load_catalog(&config.catalog_path)?;
    let query = parse_query(&config.query_text, &config.topics, &config.stop_words)?;
    let selected = select_databases(&query, &catalog)?;

    if config.mode == Mode::Fixture {
        if let Some(d) = selected.iter().find(|d| !d.is_fixture()) {
            return Err(HarnessError::Config(format!(
                "fixture mode requires file: templates, {} uses {}",
                d.name, d.query_url_template
            )));
        }
    }

    let schedule = match &config.fixture_timing_path {
        Some(path) => {
            let s = replay_timings(path, &catalog)?;
            if s.is_none() {
                warn!("{} holds no timings, using the live clock", path.display());
            }
            s
        }
        None => None,
    };
    let clock: Box<dyn Clock> = match schedule {
        Some(s) => Box::new(ReplayClock::new(SystemClock::new(), s)),
        None => Box::new(SystemClock::new()),
    };
    let clock = clock.as_ref();

    let file_root = config
        .catalog_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let fetcher = Fetcher::new(clock)
        .with_file_root(file_root)
        .with_user_agent(config.user_agent.clone())
        .with_timeout_ms(config.timeout_ms);

    let mds = run_mds(&query, &selected, &fetcher, clock);
    for ls in &mds.link_sets {
        info!("{}: {} links harvested", ls.database_name, ls.urls.len());
    }
    let saea = run_saea(
        &mds.link_sets,
        &selected,
        &query,
        &config.extract_kinds,
        config.min_relevance,
        &fetcher,
        clock,
    );

    let failed: HashSet<&str> = mds.failed_databases.iter().map(String::as_str).collect();
    let fit_points: Vec<_> = mds
        .link_sets
        .iter()
        .zip(&saea.points)
        .filter(|(ls, _)| !failed.contains(ls.database_name.as_str()))
        .map(|(_, p)| *p)
        .collect();
    let metrics = run_metrics(&fit_points).unwrap_or_else(|e| {
        warn!("no telemetry model: {e}");
        RunMetrics::unfitted(&fit_points)
    });

    let patterns: HashMap<String, String> = selected
        .iter()
        .map(|d| (d.name.clone(), d.link_pattern.clone()))
        .collect();
    let graph = build_link_graph(&saea.records, &saea.pages, &patterns);
    let ranks = pagerank(&graph, config.damping, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE).ok();
    let records = order_records(saea.records, &graph, ranks.as_ref());

    let mut diagnostics = mds.diagnostics;
    diagnostics.extend(saea.diagnostics);

    let report = CompiledReport {
        query,
        databases: selected.iter().map(|d| d.name.clone()).collect(),
        records,
        metrics,
        diagnostics,
        generated_at: generated_at(config),
    };
    Ok(CompiledRun {
        report,
        all_failed: !selected.is_empty() && failed.len() == selected.len(),
        network_used: fetcher.network_used(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the report files for a compiled run.
pub fn write_outputs(config: &RunConfig, run: &CompiledRun) -> Result<(), HarnessError> {
    write_file(&config.html_path(), &render_html(&run.report))?;
    write_file(&config.json_path(), &render_json(&run.report))?;
    if let Some(plot) = &config.plot_path {
        write_file(plot, &render_svg(&run.report.metrics))?;
    }
    Ok(())
}

/// Runs the pipeline, writes the reports and returns the process exit code:
/// 0 on success (per-source failures included), 2 for configuration
/// errors, 3 when every database failed.
pub fn run(config: &RunConfig) -> i32 {
    let compiled = match compile_run(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    for d in &compiled.report.diagnostics {
        eprintln!("warning: {}: {}", d.url, d.reason);
    }
    if let Err(e) = write_outputs(config, &compiled) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    if compiled.all_failed {
        eprintln!("error: every database failed");
    }
    compiled.exit_code()
}
