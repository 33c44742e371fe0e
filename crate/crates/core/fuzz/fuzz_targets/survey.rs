#![no_main]

use libfuzzer_sys::fuzz_target;
use pcaselect::campaign::tabulate_outcomes;
use pcaselect::ingest::parse_survey;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_survey(text) {
        for complete_case in [false, true] {
            if let Ok(table) = tabulate_outcomes(&records, complete_case) {
                table.render_text();
                table.to_json();
            }
        }
    }
});
