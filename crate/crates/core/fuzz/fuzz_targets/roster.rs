#![no_main]

use libfuzzer_sys::fuzz_target;
use pcaselect::ingest::parse_roster;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(roster) = parse_roster(text) {
        assert!(!roster.is_empty());
        for label in roster.labels() {
            assert!(roster.contains(label));
        }
    }
});
