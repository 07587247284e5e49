//! Sampling from a trained generator.

use ganforge_core::{BnMode, Rng, Tensor};

use crate::error::{GanError, Result};
use crate::network::{Network, SnSetting};

const CHUNK: usize = 32;

/// Draw `n` latent vectors from N(0, I) seeded by `seed` and decode them
/// in eval mode. Same seed, same generator: bit-identical batches.
pub fn generate(generator: &mut Network, n: usize, seed: u64) -> Result<Tensor> {
    if n == 0 {
        return Err(GanError::Invalid("generate needs n >= 1".into()));
    }
    let latent = generator.in_shape[0];
    let mut rng = Rng::new(seed);
    let mut chunks = Vec::new();
    let mut remaining = n;
    while remaining > 0 {
        let take = remaining.min(CHUNK);
        let z = Tensor::new(vec![take, latent, 1, 1], rng.normal_vec(take * latent, 0.0, 1.0))
            .map_err(GanError::Tensor)?;
        let out = generator.forward_value(&z, BnMode::Eval, SnSetting::Off)?;
        chunks.push(out);
        remaining -= take;
    }
    let samples: Vec<Tensor> = chunks
        .iter()
        .flat_map(|c| (0..c.shape()[0]).map(|i| c.slice_sample(i).unwrap()).collect::<Vec<_>>())
        .collect();
    Tensor::stack(&samples).map_err(GanError::Tensor)
}
