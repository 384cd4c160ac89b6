#![no_main]

use hat_core::objectives::{parse_libsvm, LabelMap, LibsvmOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for label_map in [LabelMap::PlusMinusOne, LabelMap::Mushrooms, LabelMap::ClassIndex] {
        let mut options = LibsvmOptions::new(label_map);
        options.num_features = Some(16);
        options.truncate = true;
        if let Ok(d) = parse_libsvm(text, &options) {
            assert_eq!(d.num_features(), 16);
            assert_eq!(d.num_samples(), d.labels.len());
        }
        // Inferred widths are bounded by the densification cap.
        let _ = parse_libsvm(text, &LibsvmOptions::new(options.label_map));
    }
});
