#![no_main]

use caplab::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json(text) {
        if let Ok(eff) = cfg.effective() {
            let again = serde_json::to_string(&eff).expect("effective config serializes");
            let back = RunConfig::from_json(&again).expect("effective config reloads");
            assert_eq!(back, eff);
        }
    }
});
