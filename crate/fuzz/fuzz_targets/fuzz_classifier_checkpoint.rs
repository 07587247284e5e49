//! Fuzzes the classifier checkpoint parser.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = ganforge_harness::classifier::parse_classifier(data);
});
