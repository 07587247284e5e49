//! Fuzzes the embedding-layout CSV reader.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ganforge_embed::read_layout_csv(text);
    }
});
