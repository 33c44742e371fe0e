#![no_main]

use libfuzzer_sys::fuzz_target;
use pcaselect::ingest::{parse_field_log, RecruitmentWindow, Roster};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let roster = Roster::new((1..=62).map(|i| format!("Y{i:02}"))).unwrap();
    let window = RecruitmentWindow::parse("2016-05-01", "2016-05-14").unwrap();
    let _ = parse_field_log(text, &roster, window);
});
