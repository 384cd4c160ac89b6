#![no_main]

use hat_cli::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        let json = serde_json::to_string(&cfg).expect("config serializes");
        let again = parse_config(&json).expect("written config parses");
        assert_eq!(serde_json::to_value(&cfg).ok(), serde_json::to_value(&again).ok());
    }
});
