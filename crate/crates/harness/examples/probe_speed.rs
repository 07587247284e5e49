// Timing probe: epochs/second for candidate acceptance configs.
use std::time::Instant;

use ganforge_data::toy;
use ganforge_gan::{train, AdamParams, LossMode, TrainConfig};

fn main() {
    let data = toy::synth_glyphs(3, 64, 0.6, 42).unwrap();
    println!("dataset: {} samples", data.len());
    for (label, loss, sn, width) in [
        ("wgan-gp w=2", LossMode::WganGp { lambda: 10.0 }, false, 2usize),
        ("wgan-gp w=4", LossMode::WganGp { lambda: 10.0 }, false, 4),
        ("vanilla+sn w=4", LossMode::Vanilla, true, 4),
    ] {
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 32,
            latent_dim: 100,
            loss,
            spectral_norm: sn,
            width,
            seed: 1,
            adam: AdamParams::default(),
            checkpoint_interval: 1000,
            grid_interval: 1000,
            ..TrainConfig::default()
        };
        let t0 = Instant::now();
        let r = train(&cfg, &data, None).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "{label}: {:.2} s for 3 epochs -> {:.2} s / 200 epochs; d_loss last {:.4}",
            dt,
            dt / 3.0 * 200.0,
            r.history.epochs.last().unwrap().d_loss
        );
    }
}
