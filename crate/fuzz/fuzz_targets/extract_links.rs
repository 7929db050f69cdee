#![no_main]

use compsearch::{extract_links, FetchedPage};
use libfuzzer_sys::fuzz_target;

const PATTERNS: &[&str] = &[
    r#"<a class="result" href="([^"]+)""#,
    r#"href="([^"]+)""#,
    r"https?://\S+",
];

fuzz_target!(|data: &[u8]| {
    let body = String::from_utf8_lossy(data).into_owned();
    for base in ["https://db.example/search/p1", "file:ew/search/q/page-1.html"] {
        let page = FetchedPage { url: base.into(), body: body.clone(), fetched_at: 0.0 };
        for pattern in PATTERNS {
            let links = extract_links(&page, pattern, base).unwrap();
            let mut unique = links.clone();
            unique.sort();
            unique.dedup();
            assert_eq!(unique.len(), links.len());
        }
    }
});
