//! Fuzzes the TOML run-config parser.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ganforge_cli::config::parse_config(text);
    }
});
