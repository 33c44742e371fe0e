#![no_main]

use libfuzzer_sys::fuzz_target;
use pcaselect::ingest::{parse_network_file, write_network_file};

// Anything that parses must survive a write/parse round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(net) = parse_network_file(text, None) {
        let written = write_network_file(&net);
        let again = parse_network_file(&written, None).expect("written network reparses");
        assert_eq!(written, write_network_file(&again));
    }
});
