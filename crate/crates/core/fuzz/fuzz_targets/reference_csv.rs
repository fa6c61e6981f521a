#![no_main]

use libfuzzer_sys::fuzz_target;
use mammoeval::registry::Registry;
use mammoeval::report::{build_scoreboard, ingest_reference_csv, render_markdown, ScoreboardEntry};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let registry = Registry::shipped();
    let Ok(docs) = ingest_reference_csv(text, &registry) else { return };
    let entries = docs
        .into_iter()
        .map(|doc| ScoreboardEntry {
            doc,
            finished_at: None,
            path: "fuzz".into(),
        })
        .collect();
    let _ = render_markdown(&build_scoreboard(entries, &registry));
});
