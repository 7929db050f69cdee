#![no_main]

use compsearch::resolve::resolve;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let (base, link) = s.split_once('\n').unwrap_or(("https://db.example/a/b.html", s));
    let _ = resolve(base, link);
});
