#![no_main]

use compsearch::report::{parse_json, render_html, render_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(json) = std::str::from_utf8(data) else { return };
    if let Ok(report) = parse_json(json) {
        let canonical = render_json(&report);
        let again = parse_json(&canonical).expect("canonical output parses");
        assert_eq!(render_json(&again), canonical);
        let _ = render_html(&report);
    }
});
