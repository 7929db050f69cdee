#![no_main]

use std::sync::OnceLock;

use compsearch::harness::parse_timings;
use compsearch::query::{parse_catalog, DatabaseDescriptor};
use libfuzzer_sys::fuzz_target;

fn catalog() -> &'static [DatabaseDescriptor] {
    static CATALOG: OnceLock<Vec<DatabaseDescriptor>> = OnceLock::new();
    CATALOG.get_or_init(|| parse_catalog(include_str!("../../fixtures/catalog.json")).unwrap())
}

fuzz_target!(|data: &[u8]| {
    let Ok(json) = std::str::from_utf8(data) else { return };
    if let Ok(Some(schedule)) = parse_timings(json, catalog()) {
        assert!(schedule.values().all(|t| t.is_finite() && *t > 0.0));
    }
});
