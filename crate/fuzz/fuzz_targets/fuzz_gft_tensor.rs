//! Fuzzes the GFT1 binary tensor decoder.
//!
//! Run with:
//!   cargo fuzz run fuzz_gft_tensor

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Errors are fine; panics and unbounded allocations are not.
    let _ = ganforge_core::gft::decode_tensor(data);
    let _ = ganforge_core::gft::read_tensor_block(data);
});
