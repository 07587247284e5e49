//! Mean discriminator score on real versus generated batches, tracked
//! per checkpoint.

use ganforge_core::BnMode;
use ganforge_data::Dataset;
use ganforge_gan::checkpoint::GanCheckpoint;
use ganforge_gan::{generate, Network, NetworkKind, SnSetting};

use crate::error::{MetricError, Result};

fn mean_score(disc: &mut Network, images: &ganforge_core::Tensor) -> Result<f64> {
    let out = disc.forward_value(images, BnMode::Eval, SnSetting::Off)?;
    Ok(out.data().iter().sum::<f64>() / out.elems() as f64)
}

/// One point of the score curve: `(mean D(real), mean D(fake))` for a
/// vanilla-mode pair. Critics are refused since their scores are unbounded.
pub fn real_fake_point(
    discriminator: &mut Network,
    real: &Dataset,
    generator: &mut Network,
    n: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if discriminator.kind != NetworkKind::Discriminator {
        return Err(MetricError::CriticMode(format!("{:?}", discriminator.kind)));
    }
    if real.is_empty() {
        return Err(MetricError::Invalid("real dataset is empty".into()));
    }
    let fake = generate(generator, n, seed)?;
    let d_real = mean_score(discriminator, &real.images)?;
    let d_fake = mean_score(discriminator, &fake)?;
    Ok((d_real, d_fake))
}

/// Evaluate the curve across a sequence of checkpoints; the series length
/// equals the number of checkpoints.
pub fn real_fake_curve(
    checkpoints: Vec<GanCheckpoint>,
    real: &Dataset,
    n: usize,
    seed: u64,
) -> Result<Vec<(usize, f64, f64)>> {
    let mut out = Vec::with_capacity(checkpoints.len());
    for mut ckpt in checkpoints {
        let epoch = ckpt.header.epoch;
        let (dr, df) = real_fake_point(&mut ckpt.discriminator, real, &mut ckpt.generator, n, seed)?;
        out.push((epoch, dr, df));
    }
    Ok(out)
}

/// CSV rows aligned with training epochs: `epoch,d_real_mean,d_fake_mean`.
pub fn curve_to_csv(points: &[(usize, f64, f64)]) -> String {
    let mut s = String::from("epoch,d_real_mean,d_fake_mean\n");
    for (e, r, f) in points {
        s.push_str(&format!("{e},{r},{f}\n"));
    }
    s
}
