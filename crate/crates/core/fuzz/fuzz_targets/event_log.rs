#![no_main]

use libfuzzer_sys::fuzz_target;
use pcaselect::campaign::{parse_event_log, CampaignState};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_event_log(text);
    if let Ok(state) = CampaignState::replay(text) {
        let again = CampaignState::replay(&state.log().render()).expect("rendered log replays");
        assert_eq!(state.state_hash(), again.state_hash());
    }
});
