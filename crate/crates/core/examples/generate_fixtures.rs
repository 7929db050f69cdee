//! Regenerates the offline fixture corpus under `fixtures/`.
//!
//! ```text
//! cargo run -p compsearch --example generate_fixtures -- fixtures
//! ```
//!
//! Four databases, four queries. For every (database, query) pair the
//! corpus holds paged result listings plus one document per harvested
//! link: `relevant` documents that mention the query and, except for the
//! Columbus listings, a few off-topic ones that must be filtered. Relevant counts and completion timings are
//! the recorded values each run is expected to reproduce.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use compsearch::extract::{ExtractionRule, TargetKind};
use compsearch::query::DatabaseDescriptor;
use compsearch::report::to_canonical_json;

struct Db {
    name: &'static str,
    tags: &'static [&'static str],
    /// Anchor markup preceding the href, shared by listings and cross-links.
    anchor: &'static str,
    link_pattern: &'static str,
    pages: usize,
}

const DBS: &[Db] = &[
    Db {
        name: "ew",
        tags: &["history", "early-modern", "modern"],
        anchor: r#"<a class="result" href=""#,
        link_pattern: r#"<a class="result" href="([^"]+)""#,
        pages: 3,
    },
    Db {
        name: "ya",
        tags: &["history", "early-modern", "modern"],
        anchor: r#"<li class="hit"><a href=""#,
        link_pattern: r#"<li class="hit"><a href="([^"]+)""#,
        pages: 3,
    },
    Db {
        name: "ae",
        tags: &["history", "ancient", "early-modern"],
        anchor: r#"<a class="ae-link" href=""#,
        link_pattern: r#"<a class="ae-link" href="([^"]+)""#,
        pages: 2,
    },
    Db {
        name: "jcb",
        tags: &["history", "early-modern", "modern"],
        anchor: r#"<a class="record" href=""#,
        link_pattern: r#"<a class="record" href="([^"]+)""#,
        pages: 3,
    },
];

struct Search {
    text: &'static str,
    /// `{QUERY}` substitution for this search.
    encoded: &'static str,
    slug: &'static str,
    phrase: &'static str,
    /// (database, relevant documents, completion seconds)
    runs: &'static [(&'static str, usize, f64)],
}

const SEARCHES: &[Search] = &[
    Search {
        text: "Christopher Columbus",
        encoded: "christopher+columbus",
        slug: "columbus",
        phrase: "Christopher Columbus",
        runs: &[("ew", 33, 2.88), ("ya", 46, 3.78), ("ae", 8, 4.75), ("jcb", 54, 5.21)],
    },
    Search {
        text: "Slave Trade",
        encoded: "slave+trade",
        slug: "slave-trade",
        phrase: "slave trade",
        runs: &[("ew", 27, 5.84), ("ya", 56, 4.36), ("ae", 13, 5.35), ("jcb", 43, 3.37)],
    },
    Search {
        text: "WWI",
        encoded: "wwi",
        slug: "wwi",
        phrase: "WWI",
        runs: &[("ew", 32, 7.34), ("ya", 45, 5.74), ("jcb", 36, 4.18)],
    },
    Search {
        text: "WWII",
        encoded: "wwii",
        slug: "wwii",
        phrase: "WWII",
        runs: &[("ew", 31, 7.28), ("ya", 37, 6.35), ("jcb", 41, 4.72)],
    },
];

const FILLER: &[&str] = &[
    "Harbour records of the period describe cargo, weather and provisions in some detail.",
    "The letter survives in a later copy held with the family papers.",
    "Marginal notes in a second hand correct several of the dates.",
    "Contemporary accounts disagree on the number of ships and men involved.",
    "The printed edition follows the manuscript closely but modernizes the spelling.",
    "A short inventory of goods is appended to the final page.",
];

const CONTEXT: &[&str] = &[
    "An eyewitness account concerning {P} recorded shortly after the events.",
    "This document discusses {P} and its consequences for the region.",
    "Correspondence in which {P} is named alongside the officials of the day.",
    "A report on {P}, with a summary of testimony gathered at the time.",
];

fn rule(kind: TargetKind, pattern: &str, max: Option<usize>) -> ExtractionRule {
    ExtractionRule {
        target_kind: kind,
        pattern: pattern.to_string(),
        capture_group: 1,
        max_matches: max,
    }
}

fn descriptor(db: &Db) -> DatabaseDescriptor {
    use TargetKind::*;
    let (rules, citation) = match db.name {
        "ew" => (
            vec![
                rule(Heading, r#"<h1 class="title">(.*?)</h1>"#, Some(1)),
                rule(Excerpt, r#"(?s)<div class="narrative">\s*<p>(.*?)</p>"#, Some(1)),
                rule(Image, r#"<img[^>]+src="([^"]+)""#, None),
            ],
            r#"(?s)<p class="citation">(.*?)</p>"#,
        ),
        "ya" => (
            vec![
                rule(Heading, r"<h3>(.*?)</h3>", Some(1)),
                rule(Excerpt, r"(?s)<blockquote>(.*?)</blockquote>", Some(2)),
                rule(Image, r#"<img[^>]+src="([^"]+)""#, None),
            ],
            r#"(?s)<div class="cite">(.*?)</div>"#,
        ),
        "ae" => (
            vec![
                rule(Heading, r"<h1>(.*?)</h1>", Some(1)),
                rule(Excerpt, r#"(?s)<p class="lead">(.*?)</p>"#, Some(1)),
                rule(Image, r#"(?s)<figure>\s*<img src="([^"]+)""#, None),
            ],
            r#"(?s)<span class="source-ref">(.*?)</span>"#,
        ),
        _ => (
            vec![
                rule(Heading, r#"<td class="title">(.*?)</td>"#, Some(1)),
                rule(Excerpt, r#"(?s)<td class="note">(.*?)</td>"#, None),
                rule(Image, r#"<img class="thumb" src="([^"]+)""#, None),
                rule(FullText, r#"(?s)<div class="transcript">(.*?)</div>"#, Some(1)),
            ],
            r#"(?s)<td class="citation">(.*?)</td>"#,
        ),
    };
    DatabaseDescriptor {
        name: db.name.to_string(),
        query_url_template: format!("file:{}/search/{{QUERY}}/page-{{PAGE}}.html", db.name),
        link_pattern: db.link_pattern.to_string(),
        result_page_limit: 3,
        topic_tags: db.tags.iter().map(|s| s.to_string()).collect(),
        extraction_rules: rules,
        citation_pattern: citation.to_string(),
        rate_limit_ms: 0,
    }
}

fn doc_name(slug: &str, i: usize) -> String {
    format!("{slug}-{:03}.html", i + 1)
}

/// Document body for position `i`; `relevant` documents mention the phrase.
fn document(db: &Db, s: &Search, i: usize, total: usize, relevant: bool) -> String {
    let title = if relevant {
        format!("{} - item {}", s.phrase, i + 1)
    } else {
        format!("Miscellaneous papers - item {}", i + 1)
    };
    let lead = if relevant {
        CONTEXT[i % CONTEXT.len()].replace("{P}", s.phrase)
    } else {
        FILLER[i % FILLER.len()].to_string()
    };
    let mut body = String::new();
    for k in 0..(i % 3) {
        body.push_str(FILLER[(i + k) % FILLER.len()]);
        body.push(' ');
    }
    if relevant && i % 4 == 1 {
        write!(body, "Later writers returned to {} repeatedly. ", s.phrase).unwrap();
    }
    let body = body.trim_end().to_string();
    let citation = match db.name {
        "ew" => format!("EyeWitness to History, \"{title}\", www.eyewitnesstohistory.com (2004)."),
        "ya" => format!("Yale Law School, Lillian Goldman Law Library &amp; Avalon Project, \"{title}\" (2008)."),
        "ae" => format!("Ancient History Encyclopedia, \"{title}\", last modified 2019."),
        _ => format!("John Carter Brown Library, record {}, \"{title}\".", 1000 + i),
    };
    let links: Vec<String> = [(i * 7 + 3) % total, (i + 1) % total]
        .iter()
        .filter(|&&j| j != i)
        .map(|&j| format!("{}{}\">related {}</a>", db.anchor, doc_name(s.slug, j), j + 1))
        .collect();
    let image = format!("../img/{}-{:03}.jpg", s.slug, i + 1);
    let links = links.join("\n");

    match db.name {
        "ew" => format!(
            "<!DOCTYPE html>\n<html><head><title>{title}</title></head><body>\n\
             <h1 class=\"title\">{title}</h1>\n<div class=\"narrative\">\n<p>{lead}</p>\n<p>{body}</p>\n</div>\n\
             {img}<p class=\"citation\">{citation}</p>\n<div class=\"see-also\">\n{links}\n</div>\n</body></html>\n",
            img = if i % 2 == 0 { format!("<img alt=\"illustration\" src=\"{image}\">\n") } else { String::new() },
        ),
        "ya" => format!(
            "<!DOCTYPE html>\n<html><head><title>{title}</title></head><body>\n\
             <h3>{title}</h3>\n<blockquote>{lead}</blockquote>\n<p>{body}</p>\n<blockquote>{second}</blockquote>\n\
             <div class=\"cite\">{citation}</div>\n<ul class=\"related\">\n{links}\n</ul>\n</body></html>\n",
            second = FILLER[(i + 2) % FILLER.len()],
            links = links.lines().map(|l| format!("{l}</li>")).collect::<Vec<_>>().join("\n"),
        ),
        "ae" => format!(
            "<!DOCTYPE html>\n<html><head><title>{title}</title></head><body><article>\n\
             <h1>{title}</h1>\n<p class=\"lead\">{lead}</p>\n<figure>\n<img src=\"{image}\">\n<figcaption>Plate {n}</figcaption>\n</figure>\n\
             <p>{body}</p>\n<footer><span class=\"source-ref\">{citation}</span></footer>\n<nav>\n{links}\n</nav>\n</article></body></html>\n",
            n = i + 1,
        ),
        _ => format!(
            "<!DOCTYPE html>\n<html><head><title>{title}</title></head><body>\n<table class=\"record\">\n\
             <tr><td class=\"title\">{title}</td></tr>\n<tr><td class=\"note\">{lead}</td></tr>\n\
             <tr><td><img class=\"thumb\" src=\"{image}\"></td></tr>\n<tr><td class=\"citation\">{citation}</td></tr>\n</table>\n\
             <div class=\"transcript\">\n<p>{lead}</p>\n<p>{body}</p>\n</div>\n<div class=\"links\">\n{links}\n</div>\n</body></html>\n",
        ),
    }
}

fn listing(db: &Db, s: &Search, page: usize, hrefs: &[String]) -> String {
    let mut out = format!(
        "<!DOCTYPE html>\n<html><head><title>Search results: {} (page {page})</title></head><body>\n\
         <form action=\"search\"><input name=\"q\" value=\"{}\"></form>\n<div class=\"results\">\n",
        s.text, s.encoded
    );
    let close = if db.name == "ya" { "</li>" } else { "" };
    for h in hrefs {
        writeln!(out, "{}{h}\">{h}</a>{close}", db.anchor).unwrap();
    }
    writeln!(out, "</div>\n<a href=\"page-{}.html\">next</a>\n</body></html>", page + 1).unwrap();
    out
}

fn write(path: &Path, contents: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, contents).unwrap();
}

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    let catalog: Vec<_> = DBS.iter().map(descriptor).collect();
    write(&root.join("catalog.json"), &to_canonical_json(&catalog).unwrap());

    for s in SEARCHES {
        let mut timings = Vec::new();
        for &(name, relevant, seconds) in s.runs {
            let db = DBS.iter().find(|d| d.name == name).unwrap();
            timings.push(serde_json::json!({"database": name, "completion_seconds": seconds}));

            // off-topic documents spread evenly through the listing; the
            // Columbus listings carry none, so harvested == retrieved there
            let irrelevant = if s.slug == "columbus" { 0 } else { 2 + relevant % 3 };
            let total = relevant + irrelevant;
            let gap = total / irrelevant.max(1);
            let mut is_relevant = vec![true; total];
            for k in 0..irrelevant {
                is_relevant[k * gap + gap / 2] = false;
            }
            for i in 0..total {
                let path = root.join(name).join("docs").join(doc_name(s.slug, i));
                write(&path, &document(db, s, i, total, is_relevant[i]));
            }

            let hrefs: Vec<String> = (0..total)
                .map(|i| format!("../../docs/{}", doc_name(s.slug, i)))
                .collect();
            let per_page = total.div_ceil(db.pages);
            for (p, chunk) in hrefs.chunks(per_page).enumerate() {
                let mut listed = chunk.to_vec();
                if p > 0 {
                    // repeated hit, dropped by harvest dedup
                    listed.push(hrefs[0].clone());
                }
                if p == 0 && name == "jcb" && s.slug == "wwii" {
                    // withdrawn record: listed but never published
                    listed.push(format!("../../docs/{}", doc_name(s.slug, 998)));
                }
                let page = p + 1;
                let path = root
                    .join(name)
                    .join("search")
                    .join(s.encoded)
                    .join(format!("page-{page}.html"));
                write(&path, &listing(db, s, page, &listed));
            }
        }
        write(
            &root.join("timings").join(format!("{}.json", s.slug)),
            &format!("{}\n", serde_json::to_string_pretty(&timings).unwrap()),
        );
    }
}
