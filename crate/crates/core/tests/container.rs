//! GFT1 container format checks.

use ganforge_core::gft;
use ganforge_core::{Rng, Tensor};
use proptest::prelude::*;

#[test]
fn roundtrip_preserves_bytes_and_values() {
    let mut rng = Rng::new(20);
    let t = Tensor::new(vec![2, 3, 4], rng.normal_vec(24, 0.0, 1.0)).unwrap();
    let bytes = gft::encode_tensor(&t);
    assert_eq!(&bytes[..4], b"GFT1");
    let back = gft::decode_tensor(&bytes).unwrap();
    assert_eq!(back, t);
    assert_eq!(gft::encode_tensor(&back), bytes);
}

#[test]
fn scalar_rank_zero_roundtrips() {
    let t = Tensor::scalar(-2.5);
    let back = gft::decode_tensor(&gft::encode_tensor(&t)).unwrap();
    assert_eq!(back, t);
}

#[test]
fn malformed_inputs_error_without_panicking() {
    assert!(gft::decode_tensor(b"").is_err());
    assert!(gft::decode_tensor(b"GFT2\x00\x00\x00\x00").is_err());
    // Claims a huge payload with no bytes behind it.
    let mut b = Vec::new();
    b.extend_from_slice(b"GFT1");
    b.extend_from_slice(&2u32.to_le_bytes());
    b.extend_from_slice(&u32::MAX.to_le_bytes());
    b.extend_from_slice(&u32::MAX.to_le_bytes());
    assert!(gft::decode_tensor(&b).is_err());
    // NaN payload is rejected.
    let mut b = Vec::new();
    b.extend_from_slice(b"GFT1");
    b.extend_from_slice(&1u32.to_le_bytes());
    b.extend_from_slice(&1u32.to_le_bytes());
    b.extend_from_slice(&f64::NAN.to_le_bytes());
    assert!(gft::decode_tensor(&b).is_err());
}

#[test]
fn concatenated_blocks_parse_in_sequence() {
    let a = Tensor::from_vec(vec![1.0, 2.0]);
    let b = Tensor::scalar(7.0);
    let mut bytes = gft::encode_tensor(&a);
    bytes.extend(gft::encode_tensor(&b));
    let (first, used) = gft::read_tensor_block(&bytes).unwrap();
    assert_eq!(first, a);
    let (second, used2) = gft::read_tensor_block(&bytes[used..]).unwrap();
    assert_eq!(second, b);
    assert_eq!(used + used2, bytes.len());
}

proptest! {
    #[test]
    fn decode_never_panics_on_arbitrary_bytes(data in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = gft::decode_tensor(&data);
    }

    #[test]
    fn roundtrip_arbitrary_small_tensors(
        dims in proptest::collection::vec(1usize..5, 0..4),
        seed in any::<u64>(),
    ) {
        let n: usize = dims.iter().product();
        let mut rng = Rng::new(seed);
        let t = Tensor::new(dims, rng.normal_vec(n, 0.0, 3.0)).unwrap();
        let back = gft::decode_tensor(&gft::encode_tensor(&t)).unwrap();
        prop_assert_eq!(back, t);
    }
}
