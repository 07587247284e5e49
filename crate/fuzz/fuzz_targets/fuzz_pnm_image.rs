//! Fuzzes the PGM/PPM decoder (binary and ASCII variants).

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = ganforge_data::pnm::decode_pnm(data);
});
