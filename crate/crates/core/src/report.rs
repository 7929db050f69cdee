//! Compiled report: ordering, HTML page, canonical JSON and the telemetry
//! plot.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::connector::Diagnostic;
use crate::extract::{SourceRecord, TargetKind};
use crate::pagerank::{normalized_percent, LinkGraph, RankVector};
use crate::query::Query;
use crate::telemetry::RunMetrics;
use crate::text::escape_html;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRecord {
    #[serde(flatten)]
    pub record: SourceRecord,
    pub combined_score: f64,
    pub pagerank: f64,
    pub pagerank_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledReport {
    pub query: Query,
    /// Databases the run searched, in catalog order.
    pub databases: Vec<String>,
    pub records: Vec<RankedRecord>,
    #[serde(rename = "telemetry")]
    pub metrics: RunMetrics,
    pub diagnostics: Vec<Diagnostic>,
    pub generated_at: String,
}

fn by_report_order(a: &RankedRecord, b: &RankedRecord) -> Ordering {
    b.combined_score
        .total_cmp(&a.combined_score)
        .then_with(|| b.pagerank.total_cmp(&a.pagerank))
        .then_with(|| a.record.url.cmp(&b.record.url))
}

/// Attaches PageRank to each record and sorts by combined score, then
/// PageRank, then URL. Records absent from the graph get rank 0.
pub fn order_records(
    records: Vec<SourceRecord>,
    graph: &LinkGraph,
    ranks: Option<&RankVector>,
) -> Vec<RankedRecord> {
    let mut lookup: HashMap<&str, (f64, f64)> = HashMap::new();
    if let Some(ranks) = ranks {
        let pct = normalized_percent(ranks).unwrap_or_else(|_| vec![0.0; ranks.scores.len()]);
        for ((url, &score), &p) in graph.nodes.iter().zip(&ranks.scores).zip(&pct) {
            lookup.insert(url.as_str(), (score, p));
        }
    }
    let mut ranked: Vec<RankedRecord> = records
        .into_iter()
        .map(|record| {
            let (pagerank, pagerank_percent) =
                lookup.get(record.url.as_str()).copied().unwrap_or((0.0, 0.0));
            RankedRecord {
                combined_score: record.combined_score(),
                record,
                pagerank,
                pagerank_percent,
            }
        })
        .collect();
    ranked.sort_by(by_report_order);
    ranked
}

/// Fixed 17-significant-digit rendering that always reads back as a float.
fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0.0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (16 - exp) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.16e}")
    }
}

fn write_canonical(out: &mut String, value: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat("  ").take(n));
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => write!(out, "{u}").unwrap(),
            (None, Some(i)) => write!(out, "{i}").unwrap(),
            _ => out.push_str(&format_float(n.as_f64().unwrap_or(0.0))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_canonical(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json's default map is ordered by key
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_canonical(out, v, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Canonical JSON of any serializable value: sorted keys, two-space indent,
/// floats at 17 significant digits.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let value = serde_json::to_value(value)?;
    let mut out = String::new();
    write_canonical(&mut out, &value, 0);
    out.push('\n');
    Ok(out)
}

pub fn render_json(report: &CompiledReport) -> String {
    to_canonical_json(report).expect("report serializes to JSON")
}

pub fn parse_json(json: &str) -> serde_json::Result<CompiledReport> {
    serde_json::from_str(json)
}

/// Only web and fixture URLs become live links.
fn safe_url(url: &str) -> Option<String> {
    let lower = url.trim_start().to_ascii_lowercase();
    let scheme = lower.split_once(':').map(|(s, _)| s);
    match scheme {
        Some("http" | "https" | "file") => Some(escape_html(url)),
        _ => None,
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        format!("{n} {word}")
    } else {
        format!("{n} {word}s")
    }
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

const STYLE: &str = "body{font-family:Georgia,serif;max-width:60rem;margin:2rem auto;padding:0 1rem;color:#222}\
section.source{border-top:1px solid #ccc;padding:1rem 0}\
p.citation{font-style:italic}\
blockquote{border-left:3px solid #999;margin-left:0;padding-left:1rem}\
img{max-width:100%;display:block;margin:.5rem 0}\
p.meta,p.url{font-size:.85rem;color:#555}\
table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:.2rem .5rem}";

fn render_record(out: &mut String, index: usize, ranked: &RankedRecord) {
    let rec = &ranked.record;
    let title = rec
        .components
        .iter()
        .find(|c| c.kind == TargetKind::Heading)
        .map(|c| c.value.as_str())
        .unwrap_or(rec.url.as_str());
    writeln!(out, "<section class=\"source\" id=\"source-{index}\">").unwrap();
    writeln!(out, "<h2>{index}. {}</h2>", escape_html(title)).unwrap();
    if let Some(c) = &rec.citation {
        writeln!(out, "<p class=\"citation\">{}</p>", escape_html(c)).unwrap();
    }
    for c in &rec.components {
        match c.kind {
            TargetKind::Citation if rec.citation.as_deref() == Some(c.value.as_str()) => {}
            TargetKind::Heading if c.value == title => {}
            TargetKind::Image => match safe_url(&c.value) {
                Some(src) => writeln!(out, "<img src=\"{src}\" alt=\"\">").unwrap(),
                None => {
                    writeln!(out, "<p class=\"image\">{}</p>", escape_html(&c.value)).unwrap()
                }
            },
            TargetKind::Excerpt | TargetKind::FullText => {
                writeln!(out, "<blockquote>{}</blockquote>", escape_html(&c.value)).unwrap()
            }
            kind => writeln!(out, "<p class=\"{kind}\">{}</p>", escape_html(&c.value)).unwrap(),
        }
    }
    writeln!(
        out,
        "<p class=\"meta\">{} &middot; relevance {} &middot; proximity {} &middot; PageRank {} ({}%)</p>",
        escape_html(&rec.database_name),
        num(rec.relevance_score),
        num(rec.proximity_score),
        num(ranked.pagerank),
        num(ranked.pagerank_percent),
    )
    .unwrap();
    match safe_url(&rec.url) {
        Some(href) => writeln!(out, "<p class=\"url\"><a href=\"{href}\">{href}</a></p>").unwrap(),
        None => writeln!(out, "<p class=\"url\">{}</p>", escape_html(&rec.url)).unwrap(),
    }
    out.push_str("</section>\n");
}

fn render_telemetry(out: &mut String, m: &RunMetrics) {
    out.push_str("<footer>\n<h2>Telemetry</h2>\n<table>\n");
    let mut row = |k: &str, v: String| {
        writeln!(out, "<tr><th>{k}</th><td>{}</td></tr>", escape_html(&v)).unwrap();
    };
    row("Total sources", m.total_sources.to_string());
    row("Total time (s)", num(m.total_time_seconds));
    if m.fitted {
        row("S(t)", m.s_of_t.to_string());
        row("E(t)", m.e_of_t.to_string());
        row("Average S over domain", num(m.average_value));
        row("Secant rate (sources/s)", num(m.secant_rate));
    } else {
        row("S(t)", "not fitted (fewer than two completion points)".to_string());
    }
    row("Throughput (sources/s)", num(m.throughput));
    row("Domain (s)", format!("[{}, {}]", num(m.domain.0), num(m.domain.1)));
    out.push_str("</table>\n");
    if !m.points.is_empty() {
        out.push_str("<table>\n<tr><th>t (s)</th><th>sources</th><th>cumulative</th></tr>\n");
        let mut sorted = m.points.clone();
        sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
        for (p, c) in sorted.iter().zip(&m.cumulative) {
            writeln!(out, "<tr><td>{}</td><td>{}</td><td>{}</td></tr>", num(p.t), p.y, c.y).unwrap();
        }
        out.push_str("</table>\n");
    }
    out.push_str("</footer>\n");
}

/// Self-contained HTML page. All extracted text is escaped.
pub fn render_html(report: &CompiledReport) -> String {
    let mut out = String::new();
    let q = escape_html(&report.query.raw_text);
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    writeln!(out, "<title>Compiled sources: {q}</title>").unwrap();
    writeln!(out, "<style>{STYLE}</style>\n</head>\n<body>\n<header>").unwrap();
    writeln!(out, "<h1>{q}</h1>").unwrap();
    writeln!(
        out,
        "<p class=\"summary\">{} from {} &middot; generated {}</p>",
        plural(report.records.len(), "source"),
        plural(report.databases.len(), "database"),
        escape_html(&report.generated_at)
    )
    .unwrap();
    out.push_str("</header>\n<main>\n");
    for (i, r) in report.records.iter().enumerate() {
        render_record(&mut out, i + 1, r);
    }
    out.push_str("</main>\n");
    render_telemetry(&mut out, &report.metrics);
    if !report.diagnostics.is_empty() {
        out.push_str("<aside>\n<h2>Diagnostics</h2>\n<ul>\n");
        for d in &report.diagnostics {
            writeln!(out, "<li>{}: {}</li>", escape_html(&d.url), escape_html(&d.reason)).unwrap();
        }
        out.push_str("</ul>\n</aside>\n");
    }
    out.push_str("</body>\n</html>\n");
    out
}

/// SVG line plot of S(t) and E(t) over the restricted domain, each scaled to
/// its own vertical range.
pub fn render_svg(m: &RunMetrics) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    )
    .unwrap();
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let (a, b) = m.domain;
    if !m.fitted || !(b > a) {
        out.push_str("<text x=\"50\" y=\"200\">insufficient telemetry for a fit</text>\n</svg>\n");
        return out;
    }
    let samples = 200;
    let ts: Vec<f64> = (0..=samples)
        .map(|i| a + (b - a) * i as f64 / samples as f64)
        .collect();
    let x = |t: f64| PAD + (t - a) / (b - a) * (W - 2.0 * PAD);
    let mut curve = |poly: &crate::telemetry::Polynomial, color: &str, label: &str, row: f64| {
        let ys: Vec<f64> = ts.iter().map(|&t| poly.evaluate(t)).collect();
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let y = |v: f64| H - PAD - (v - lo) / span * (H - 2.0 * PAD);
        let pts: Vec<String> = ts
            .iter()
            .zip(&ys)
            .map(|(&t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
            .collect();
        writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            pts.join(" ")
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"{PAD}\" y=\"{row}\" fill=\"{color}\">{} = {} [{:.2}, {:.2}]</text>",
            label,
            escape_html(&poly.to_string()),
            lo,
            hi
        )
        .unwrap();
    };
    curve(&m.s_of_t, "#1f77b4", "S(t)", 20.0);
    curve(&m.e_of_t, "#d62728", "E(t)", 38.0);
    for t in [a, b] {
        writeln!(
            out,
            "<line x1=\"{0:.2}\" y1=\"{PAD}\" x2=\"{0:.2}\" y2=\"{1}\" stroke=\"#888\" stroke-dasharray=\"4 4\"/>",
            x(t),
            H - PAD
        )
        .unwrap();
        writeln!(out, "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{t:.2}s</text>", x(t), H - PAD + 20.0)
            .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
