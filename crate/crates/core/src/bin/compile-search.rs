use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use compsearch::connector::{DEFAULT_TIMEOUT_MS, DEFAULT_USER_AGENT};
use compsearch::extract::{parse_kinds, TargetKind};
use compsearch::harness::{self, Mode, RunConfig, EXIT_CONFIG, USER_AGENT_ENV};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Live,
    Fixture,
}

/// Search several document databases at once and compile the matching
/// sources into an HTML and JSON report.
#[derive(Parser, Debug)]
#[command(name = "compile-search", version)]
struct Args {
    /// Search text; stop-words are dropped.
    query: String,

    /// Comma-separated topic tags used to pick databases.
    #[arg(long, value_delimiter = ',')]
    topics: Vec<String>,

    #[arg(long, default_value = "fixtures/catalog.json")]
    catalog: PathBuf,

    /// Comma-separated kinds: image, citation, excerpt, heading, full_text.
    #[arg(long, default_value = "citation,excerpt", value_parser = parse_kinds)]
    extract: BTreeSet<TargetKind>,

    #[arg(long, default_value_t = 1.0)]
    min_relevance: f64,

    #[arg(long, default_value_t = 0.85)]
    damping: f64,

    /// Output stem: writes <out>.html and <out>.json.
    #[arg(long, default_value = "report")]
    out: PathBuf,

    #[arg(long, value_enum, default_value_t = ModeArg::Fixture)]
    mode: ModeArg,

    /// JSON list of {"database", "completion_seconds"} to replay.
    #[arg(long)]
    replay_timings: Option<PathBuf>,

    /// Write an SVG plot of S(t) and E(t).
    #[arg(long)]
    plot: Option<PathBuf>,

    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    timeout_ms: u64,

    /// Newline-separated stop-word list replacing the built-in one.
    #[arg(long)]
    stop_words: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let mut config = RunConfig::new(args.query, args.catalog);
    config.topics = args.topics.into_iter().filter(|t| !t.is_empty()).collect();
    config.extract_kinds = args.extract;
    config.min_relevance = args.min_relevance;
    config.damping = args.damping;
    config.out_path = args.out;
    config.mode = match args.mode {
        ModeArg::Live => Mode::Live,
        ModeArg::Fixture => Mode::Fixture,
    };
    config.fixture_timing_path = args.replay_timings;
    config.plot_path = args.plot;
    config.timeout_ms = args.timeout_ms;
    config.user_agent = std::env::var(USER_AGENT_ENV).unwrap_or_else(|_| DEFAULT_USER_AGENT.into());
    if let Some(path) = args.stop_words {
        match std::fs::read_to_string(&path) {
            Ok(s) => {
                config.stop_words = s
                    .lines()
                    .map(|l| l.trim().to_lowercase())
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .collect()
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        }
    }

    ExitCode::from(harness::run(&config) as u8)
}
