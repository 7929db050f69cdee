#![allow(dead_code)]

use std::path::PathBuf;

use compsearch::harness::{compile_run, CompiledRun};
use compsearch::RunConfig;

pub fn fixtures() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures"))
}

pub fn catalog() -> PathBuf {
    fixtures().join("catalog.json")
}

/// (query text, topic, timing file slug)
pub const SEARCHES: [(&str, &str, &str); 4] = [
    ("Christopher Columbus", "early-modern", "columbus"),
    ("Slave Trade", "early-modern", "slave-trade"),
    ("WWI", "modern", "wwi"),
    ("WWII", "modern", "wwii"),
];

pub fn replay_config(query: &str, topic: &str, slug: &str) -> RunConfig {
    let mut config = RunConfig::new(query, catalog());
    config.topics = [topic.to_string()].into_iter().collect();
    config.fixture_timing_path = Some(fixtures().join("timings").join(format!("{slug}.json")));
    config
}

pub fn replay(query: &str, topic: &str, slug: &str) -> CompiledRun {
    compile_run(&replay_config(query, topic, slug)).expect("fixture run")
}

/// Minimal HTTP/1.1 server for live-mode tests. Unknown paths get a 404.
/// Returns the base URL and the raw request heads received so far.
pub fn serve(
    routes: Vec<(&'static str, u16, String)>,
) -> (String, std::sync::Arc<std::sync::Mutex<Vec<String>>>) {
    use std::io::{Read, Write};
    use std::sync::{Arc, Mutex};

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let log = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&log);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut head = Vec::new();
            let mut buf = [0u8; 1024];
            while !head.windows(4).any(|w| w == b"\r\n\r\n") {
                match stream.read(&mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(n) => head.extend_from_slice(&buf[..n]),
                }
            }
            let head = String::from_utf8_lossy(&head).into_owned();
            let path = head.split_whitespace().nth(1).unwrap_or("").to_string();
            seen.lock().unwrap().push(head);
            let (status, body) = routes
                .iter()
                .find(|(p, _, _)| *p == path)
                .map(|(_, s, b)| (*s, b.clone()))
                .unwrap_or((404, String::new()));
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    (base, log)
}
