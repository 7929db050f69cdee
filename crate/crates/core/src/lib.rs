//! Federated metasearch and source compilation.
//!
//! One query is dispatched to several document databases at once
//! ([`connector`]), every harvested source is opened, scored and mined for
//! citations, images and excerpts ([`extract`]), sources are ranked by
//! relevance and link popularity ([`pagerank`]), and the run models its own
//! retrieval rate with an interpolating polynomial ([`telemetry`]). The
//! result is written as an HTML page and a canonical JSON document
//! ([`report`]).

pub mod clock;
pub mod connector;
pub mod extract;
pub mod harness;
pub mod pagerank;
pub mod query;
pub mod report;
pub mod resolve;
pub mod telemetry;
pub mod text;

pub use clock::{Clock, ManualClock, ReplayClock, SystemClock, TimingSchedule};
pub use connector::{
    extract_links, format_search_url, run_mds, Diagnostic, Fetch, FetchError, FetchedPage, Fetcher,
    LinkSet, MdsOutput, PatternError,
};
pub use extract::{
    analyze_source, apply_rule, extract_citation, proximity_score, relevance_score, run_saea,
    Component, ExtractionRule, SaeaOutput, SourceRecord, TargetKind,
};
pub use harness::{compile_run, run, Mode, RunConfig};
pub use pagerank::{build_link_graph, normalized_percent, pagerank, LinkGraph, RankVector};
pub use query::{parse_query, select_databases, DatabaseDescriptor, Query};
pub use report::{order_records, render_html, render_json, CompiledReport, RankedRecord};
pub use telemetry::{
    average_value, differentiate, evaluate, fit_ipf, manual_comparison_rate,
    mean_sources_per_search, run_metrics, Polynomial, RunMetrics, TelemetryPoint,
};
