//! Generator and discriminator builders.
//!
//! Channel widths scale from a base `width` (64 reproduces the reference
//! stacks exactly: 512/256/128/64 inside the generator, 64/128/256/512
//! inside the discriminator). Smaller widths keep the layer structure and
//! spatial ladder while shrinking compute for desk-scale runs.

use crate::error::{GanError, Result};
use crate::network::{Layer, Network, NetworkKind};

pub const DEFAULT_WIDTH: usize = 64;

fn check_channels(what: &str, ch: usize) -> Result<()> {
    if ch != 1 && ch != 3 {
        return Err(GanError::Invalid(format!("{what} channel count must be 1 or 3, got {ch}")));
    }
    Ok(())
}

/// Five transposed convolutions interleaved with batch-norm and ReLU,
/// closing with Tanh: `latent x 1 x 1 -> out_channels x 64 x 64`.
pub fn build_generator(latent_dim: usize, out_channels: usize, width: usize) -> Result<Network> {
    if latent_dim == 0 {
        return Err(GanError::Invalid("latent_dim must be at least 1".into()));
    }
    check_channels("generator output", out_channels)?;
    if width == 0 {
        return Err(GanError::Invalid("width must be at least 1".into()));
    }
    let g = width;
    let layers = vec![
        Layer::ConvTranspose2d { in_ch: latent_dim, out_ch: 8 * g, k: 4, stride: 1, pad: 0 },
        Layer::BatchNorm2d { ch: 8 * g },
        Layer::Relu,
        Layer::ConvTranspose2d { in_ch: 8 * g, out_ch: 4 * g, k: 4, stride: 2, pad: 1 },
        Layer::BatchNorm2d { ch: 4 * g },
        Layer::Relu,
        Layer::ConvTranspose2d { in_ch: 4 * g, out_ch: 2 * g, k: 4, stride: 2, pad: 1 },
        Layer::BatchNorm2d { ch: 2 * g },
        Layer::Relu,
        Layer::ConvTranspose2d { in_ch: 2 * g, out_ch: g, k: 4, stride: 2, pad: 1 },
        Layer::BatchNorm2d { ch: g },
        Layer::Relu,
        Layer::ConvTranspose2d { in_ch: g, out_ch: out_channels, k: 4, stride: 2, pad: 1 },
        Layer::Tanh,
    ];
    Ok(Network::from_layers(NetworkKind::Generator, layers, vec![latent_dim, 1, 1]))
}

/// Strided convolutions with batch-norm and LeakyReLU(0.2), a 1x1x1 head,
/// flatten, sigmoid: `in_channels x 64 x 64 -> 1` per sample.
///
/// With `critic = true` the batch-norm layers and the terminal sigmoid are
/// omitted so the per-sample score (and its input gradient) is well
/// defined for gradient-penalty training.
pub fn build_discriminator(in_channels: usize, width: usize, critic: bool) -> Result<Network> {
    check_channels("discriminator input", in_channels)?;
    if width == 0 {
        return Err(GanError::Invalid("width must be at least 1".into()));
    }
    let d = width;
    let mut layers = Vec::new();
    let blocks = [(in_channels, d), (d, 2 * d), (2 * d, 4 * d), (4 * d, 8 * d)];
    for &(cin, cout) in blocks.iter() {
        layers.push(Layer::Conv2d { in_ch: cin, out_ch: cout, k: 4, stride: 2, pad: 1 });
        if !critic {
            layers.push(Layer::BatchNorm2d { ch: cout });
        }
        layers.push(Layer::LeakyRelu { slope: 0.2 });
    }
    layers.push(Layer::Conv2d { in_ch: 8 * d, out_ch: 1, k: 4, stride: 1, pad: 0 });
    layers.push(Layer::Flatten);
    if !critic {
        layers.push(Layer::Sigmoid);
    }
    let kind = if critic { NetworkKind::Critic } else { NetworkKind::Discriminator };
    Ok(Network::from_layers(kind, layers, vec![in_channels, 64, 64]))
}
