//! Fuzzes the .gfc GAN checkpoint parser (container + header + tensors).

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = ganforge_gan::checkpoint::decode_container(data);
    let _ = ganforge_gan::checkpoint::parse_gan_checkpoint(data);
});
