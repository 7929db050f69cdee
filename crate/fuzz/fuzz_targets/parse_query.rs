#![no_main]

use std::collections::BTreeSet;

use compsearch::query::{default_stop_words, parse_query};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(raw) = std::str::from_utf8(data) else { return };
    let stops = default_stop_words();
    if let Ok(q) = parse_query(raw, &BTreeSet::new(), &stops) {
        for k in &q.keywords {
            assert!(!k.is_empty() && !k.contains(char::is_whitespace));
        }
        let again = parse_query(&q.keywords.join(" "), &BTreeSet::new(), &stops).unwrap();
        assert_eq!(again.keywords, q.keywords);
    }
});
