// FID-progress probe: epoch-1 vs final FID in a fixed random-projection
// feature space, across seeds and stabilizer modes.
use ganforge_core::derive_seed;
use ganforge_data::toy;
use ganforge_gan::checkpoint::load_gan_checkpoint;
use ganforge_gan::train::TrainOutputs;
use ganforge_gan::{generate, train, LossMode, TrainConfig};
use ganforge_metrics::{extract_features, fid, RandomProjection, Source};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(200);
    let width: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(4);
    let mode = args.get(3).cloned().unwrap_or_else(|| "wgan".into());
    let seeds: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(2);

    let data = toy::synth_glyphs(3, 64, 0.6, 42).unwrap();
    let extractor = RandomProjection { dim: 64, seed: 99 };
    let real = extract_features(&data.images, &extractor, Source::Real).unwrap();

    for seed in 0..seeds as u64 {
        let (loss, sn) = match mode.as_str() {
            "wgan" => (LossMode::WganGp { lambda: 10.0 }, false),
            "wgansn" => (LossMode::WganGp { lambda: 10.0 }, true),
            "vsn" => (LossMode::Vanilla, true),
            _ => (LossMode::Vanilla, false),
        };
        let dir = std::env::temp_dir().join(format!("ganforge-fidprobe-{mode}-{width}-{seed}"));
        let _ = std::fs::remove_dir_all(&dir);
        let cfg = TrainConfig {
            epochs,
            batch_size: 32,
            latent_dim: 100,
            loss,
            spectral_norm: sn,
            width,
            seed: derive_seed(1000, &format!("probe/{seed}")),
            checkpoint_interval: epochs,
            grid_interval: 10_000,
            ..TrainConfig::default()
        };
        let t0 = std::time::Instant::now();
        let result = train(&cfg, &data, Some(&TrainOutputs { dir: dir.clone() })).unwrap();
        let fid_at = |path: &std::path::Path| -> f64 {
            let mut ckpt = load_gan_checkpoint(path).unwrap();
            let samples = generate(&mut ckpt.generator, 192, 7).unwrap();
            let fake = extract_features(&samples, &extractor, Source::Synthetic).unwrap();
            fid(&real, &fake).unwrap()
        };
        let f1 = fid_at(&result.checkpoints[0]);
        let ff = fid_at(result.checkpoints.last().unwrap());
        println!(
            "mode={mode} w={width} seed={seed}: fid(ep1)={f1:.2} fid(ep{epochs})={ff:.2} ratio={:.3} secs={:.1}",
            ff / f1,
            t0.elapsed().as_secs_f64()
        );
        let _ = std::fs::remove_dir_all(&dir);
    }
}
