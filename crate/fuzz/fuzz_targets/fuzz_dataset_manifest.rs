//! Fuzzes the dataset-cache manifest parser.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = ganforge_data::cache::parse_manifest(data);
});
