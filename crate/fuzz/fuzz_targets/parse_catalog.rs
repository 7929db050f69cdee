#![no_main]

use compsearch::query::parse_catalog;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(json) = std::str::from_utf8(data) else { return };
    if let Ok(catalog) = parse_catalog(json) {
        for d in &catalog {
            d.validate().expect("accepted descriptors validate");
        }
    }
});
