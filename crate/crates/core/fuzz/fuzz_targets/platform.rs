#![no_main]

use libfuzzer_sys::fuzz_target;
use pcaselect::ingest::{parse_platform_edges, Roster};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let roster = Roster::new((1..=62).map(|i| format!("Y{i:02}"))).unwrap();
    if let Ok(edges) = parse_platform_edges(text, &roster) {
        for e in edges {
            assert!(roster.contains(&e.u_label) && roster.contains(&e.v_label));
        }
    }
});
