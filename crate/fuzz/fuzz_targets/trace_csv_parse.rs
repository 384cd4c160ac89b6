#![no_main]

use hat_core::trace::{csv_string, parse_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_csv(text) {
        let again = parse_csv(&csv_string(&records)).expect("written traces parse");
        assert_eq!(records.len(), again.len());
        for (a, b) in records.iter().zip(&again) {
            assert!(a.same_numbers(b) && a.wall_nanos == b.wall_nanos);
        }
    }
});
