#![no_main]

use std::collections::BTreeSet;
use std::sync::OnceLock;

use compsearch::extract::{CompiledRules, TargetKind};
use compsearch::query::{parse_catalog, DatabaseDescriptor, Query};
use compsearch::text::strip_markup;
use compsearch::{proximity_score, relevance_score};
use libfuzzer_sys::fuzz_target;

fn catalog() -> &'static [DatabaseDescriptor] {
    static CATALOG: OnceLock<Vec<DatabaseDescriptor>> = OnceLock::new();
    CATALOG.get_or_init(|| parse_catalog(include_str!("../../fixtures/catalog.json")).unwrap())
}

fuzz_target!(|data: &[u8]| {
    let body = String::from_utf8_lossy(data);
    let query = Query {
        raw_text: "slave trade".into(),
        keywords: vec!["slave".into(), "trade".into()],
        topics: BTreeSet::new(),
    };
    let _ = strip_markup(&body);
    let rel = relevance_score(&body, &query);
    let prox = proximity_score(&body, &query);
    assert!(rel >= 0.0);
    assert!(prox == 0.0 || (prox > 0.0 && prox <= 0.5));

    let kinds: BTreeSet<TargetKind> = TargetKind::ALL.into_iter().collect();
    for d in catalog() {
        let rules = CompiledRules::compile(d).unwrap();
        if let Some(rec) = rules.analyze("file:x/doc.html", &body, &query, &kinds, 1.0) {
            assert!(rec.relevance_score >= 1.0);
            assert!(!rec.components.is_empty());
        }
    }
});
