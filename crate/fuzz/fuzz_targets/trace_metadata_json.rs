#![no_main]

use hat_core::trace::parse_metadata;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(meta) = parse_metadata(text) {
        let json = serde_json::to_string(&meta).expect("metadata serializes");
        let again = parse_metadata(&json).expect("written metadata parses");
        assert_eq!(serde_json::to_value(&meta).ok(), serde_json::to_value(&again).ok());
    }
});
