//! Training-loop contracts: update counts, determinism, checkpoints.

use std::fs;
use std::path::PathBuf;

use ganforge_data::toy;
use ganforge_gan::checkpoint::load_gan_checkpoint;
use ganforge_gan::train::{resume, TrainOutputs};
use ganforge_gan::{generate, train, AdamParams, LossMode, TrainConfig};

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ganforge-gan-test-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn tiny_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 1,
        batch_size: 32,
        latent_dim: 8,
        width: 2,
        seed,
        checkpoint_interval: 1000,
        grid_interval: 1000,
        ..TrainConfig::default()
    }
}

#[test]
fn one_epoch_on_64_samples_gives_two_updates_each() {
    let data = toy::synth_glyphs(2, 32, 0.5, 9).unwrap();
    assert_eq!(data.len(), 64);
    let cfg = tiny_cfg(1);
    let result = train(&cfg, &data, None).unwrap();
    assert_eq!(result.d_steps, 2);
    assert_eq!(result.g_steps, 2);
    assert_eq!(result.history.epochs.len(), 1);
}

#[test]
fn k3_gives_three_to_one_update_ratio() {
    let data = toy::synth_glyphs(2, 32, 0.5, 9).unwrap();
    let cfg = TrainConfig { k_disc_steps: 3, ..tiny_cfg(2) };
    let result = train(&cfg, &data, None).unwrap();
    assert_eq!(result.d_steps, 6);
    assert_eq!(result.g_steps, 2);
}

#[test]
fn update_count_invariant_across_epochs() {
    let data = toy::synth_glyphs(2, 24, 0.5, 9).unwrap(); // 48 samples, 1 batch of 32
    let cfg = TrainConfig { epochs: 3, k_disc_steps: 2, ..tiny_cfg(3) };
    let result = train(&cfg, &data, None).unwrap();
    let batches = 48 / 32;
    assert_eq!(result.d_steps as usize, 3 * batches * 2);
    assert_eq!(result.g_steps as usize, 3 * batches);
}

#[test]
fn same_seed_training_is_bit_identical() {
    let data = toy::synth_glyphs(2, 16, 0.5, 9).unwrap();
    let cfg = TrainConfig { epochs: 2, batch_size: 8, ..tiny_cfg(4) };
    let a = train(&cfg, &data, None).unwrap();
    let b = train(&cfg, &data, None).unwrap();
    assert_eq!(a.generator.params, b.generator.params);
    assert_eq!(a.discriminator.params, b.discriminator.params);
    for (ea, eb) in a.history.epochs.iter().zip(&b.history.epochs) {
        assert_eq!(ea.d_loss, eb.d_loss);
        assert_eq!(ea.g_loss, eb.g_loss);
    }
}

#[test]
fn wgan_gp_mode_trains_and_stays_finite() {
    let data = toy::synth_glyphs(2, 16, 0.5, 9).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 8,
        loss: LossMode::WganGp { lambda: 10.0 },
        adam: AdamParams { beta1: 0.5, ..AdamParams::default() },
        ..tiny_cfg(5)
    };
    let result = train(&cfg, &data, None).unwrap();
    for e in &result.history.epochs {
        assert!(e.d_loss.is_finite() && e.g_loss.is_finite());
    }
}

#[test]
fn spectral_norm_mode_trains() {
    let data = toy::synth_glyphs(2, 16, 0.5, 9).unwrap();
    let cfg = TrainConfig { epochs: 1, batch_size: 8, spectral_norm: true, ..tiny_cfg(6) };
    let result = train(&cfg, &data, None).unwrap();
    assert!(result.discriminator.buffers.keys().any(|k| k.ends_with("sn_u")));
}

#[test]
fn generate_is_seed_deterministic_and_seed_sensitive() {
    let data = toy::synth_glyphs(2, 16, 0.5, 9).unwrap();
    let cfg = TrainConfig { epochs: 1, batch_size: 8, ..tiny_cfg(7) };
    let mut result = train(&cfg, &data, None).unwrap();
    let a = generate(&mut result.generator, 32, 123).unwrap();
    let b = generate(&mut result.generator, 32, 123).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.shape(), &[32, 3, 64, 64]);
    let c = generate(&mut result.generator, 32, 124).unwrap();
    assert_ne!(a, c);
}

#[test]
fn checkpoint_roundtrip_generates_identically() {
    let dir = scratch("roundtrip");
    let data = toy::synth_glyphs(2, 16, 0.5, 9).unwrap();
    let cfg = TrainConfig { epochs: 2, batch_size: 8, checkpoint_interval: 2, ..tiny_cfg(8) };
    let mut result = train(&cfg, &data, Some(&TrainOutputs { dir: dir.clone() })).unwrap();
    let before = generate(&mut result.generator, 8, 42).unwrap();
    let last = result.checkpoints.last().unwrap();
    let mut loaded = load_gan_checkpoint(last).unwrap();
    let after = generate(&mut loaded.generator, 8, 42).unwrap();
    assert_eq!(before, after);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn checkpoint_bytes_are_deterministic() {
    let dir_a = scratch("det-a");
    let dir_b = scratch("det-b");
    let data = toy::synth_glyphs(2, 16, 0.5, 9).unwrap();
    let cfg = TrainConfig { epochs: 1, batch_size: 8, checkpoint_interval: 1, ..tiny_cfg(9) };
    train(&cfg, &data, Some(&TrainOutputs { dir: dir_a.clone() })).unwrap();
    train(&cfg, &data, Some(&TrainOutputs { dir: dir_b.clone() })).unwrap();
    let a = fs::read(dir_a.join("checkpoint_ep0001.gfc")).unwrap();
    let b = fs::read(dir_b.join("checkpoint_ep0001.gfc")).unwrap();
    assert_eq!(a, b);
    fs::remove_dir_all(dir_a).unwrap();
    fs::remove_dir_all(dir_b).unwrap();
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = scratch("resume");
    let data = toy::synth_glyphs(2, 16, 0.5, 9).unwrap();

    // Uninterrupted 4 epochs.
    let cfg_b = TrainConfig { epochs: 4, batch_size: 8, ..tiny_cfg(10) };
    let full = train(&cfg_b, &data, None).unwrap();

    // 2 epochs, checkpoint, resume 2 more.
    let cfg_a = TrainConfig { epochs: 2, batch_size: 8, checkpoint_interval: 2, ..tiny_cfg(10) };
    let first = train(&cfg_a, &data, Some(&TrainOutputs { dir: dir.clone() })).unwrap();
    let ckpt = load_gan_checkpoint(first.checkpoints.last().unwrap()).unwrap();
    let resumed = resume(ckpt, &data, 2, None).unwrap();

    for (name, tensor) in &full.generator.params {
        assert_eq!(tensor, &resumed.generator.params[name], "generator {name} diverged");
    }
    for (name, tensor) in &full.discriminator.params {
        assert_eq!(tensor, &resumed.discriminator.params[name], "discriminator {name} diverged");
    }
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn training_grids_are_written() {
    let dir = scratch("grids");
    let data = toy::synth_glyphs(2, 16, 0.5, 9).unwrap();
    let cfg = TrainConfig { epochs: 2, batch_size: 8, grid_interval: 1, ..tiny_cfg(11) };
    train(&cfg, &data, Some(&TrainOutputs { dir: dir.clone() })).unwrap();
    assert!(dir.join("samples_ep0001.pgm").exists());
    assert!(dir.join("samples_ep0002.pgm").exists());
    let bytes = fs::read(dir.join("samples_ep0001.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn config_validation_rejects_bad_values() {
    let data = toy::synth_glyphs(1, 4, 0.5, 9).unwrap();
    for bad in [
        TrainConfig { epochs: 0, ..TrainConfig::default() },
        TrainConfig { batch_size: 1, ..TrainConfig::default() },
        TrainConfig { latent_dim: 0, ..TrainConfig::default() },
        TrainConfig { k_disc_steps: 0, ..TrainConfig::default() },
        TrainConfig { loss: LossMode::WganGp { lambda: -1.0 }, ..TrainConfig::default() },
    ] {
        assert!(train(&bad, &data, None).is_err());
    }
}
