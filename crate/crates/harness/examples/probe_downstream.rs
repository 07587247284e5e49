// Downstream-direction probe: does GAN augmentation beat real-only on a
// 32-per-class task?
use ganforge_core::derive_seed;
use ganforge_data::split::{split, SplitSpec};
use ganforge_data::toy;
use ganforge_gan::{LossMode, TrainConfig};
use ganforge_harness::protocol::{run_protocol, summarize, SynthPools};
use ganforge_harness::{gate_loop, train_per_class_gans, ClassifierConfig, GateLoopConfig, ProtocolConfig, Regimen};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let gan_epochs: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(120);
    let clf_epochs: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(12);
    let ratio: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1.0);

    let t0 = std::time::Instant::now();
    // 3 classes x 64, split to 32 train / 8 val / 24 test per class.
    let data = toy::synth_glyphs(3, 64, 0.6, 42).unwrap();
    let splits = split(&data, &SplitSpec { fractions: (0.5, 0.125, 0.375), seed: 7, stratified: true }).unwrap();
    println!("train {} val {} test {}", splits.train.len(), splits.val.as_ref().unwrap().len(), splits.test.as_ref().unwrap().len());

    let gan_cfg = TrainConfig {
        epochs: gan_epochs,
        batch_size: 32,
        latent_dim: 100,
        width: 4,
        loss: LossMode::WganGp { lambda: 10.0 },
        seed: derive_seed(5, "probe-gan"),
        checkpoint_interval: gan_epochs,
        grid_interval: 10_000,
        ..TrainConfig::default()
    };
    let dir = std::env::temp_dir().join("ganforge-probe-downstream");
    let _ = std::fs::remove_dir_all(&dir);
    let mut ckpts = train_per_class_gans(&splits.train, &gan_cfg, &dir).unwrap();
    println!("per-class gans trained at {:.1}s", t0.elapsed().as_secs_f64());
    let gated = gate_loop(
        &splits.train,
        &mut ckpts,
        &gan_cfg,
        &GateLoopConfig { pool_per_class: 96, ..GateLoopConfig::default() },
        &dir,
    )
    .unwrap();
    println!("pool {} filtered {} fid {:.1}", gated.full.len(), gated.filtered.len(), gated.report.fid);

    let cfg = ProtocolConfig {
        seeds: (0..5).map(|i| derive_seed(77, &format!("s{i}"))).collect(),
        classifier: ClassifierConfig { epochs: clf_epochs, batch_size: 16, lr: 1e-3, width: 8, seed: 0 },
        classical_policy_seed: 3,
        positive_class: None,
        specificity_target: 0.9,
    };
    let pools = SynthPools { full: &gated.full, filtered: &gated.filtered };
    let regimens = [
        Regimen::Real,
        Regimen::Gan { ratio, filtered: false },
        Regimen::Gan { ratio, filtered: true },
    ];
    let results = run_protocol(&splits, Some(&pools), &regimens, &cfg).unwrap();
    for (label, acc, sd, f1, _) in summarize(&results) {
        println!("{label}: acc {acc:.4} ± {sd:.4} | f1 {f1:.4}");
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
    let _ = std::fs::remove_dir_all(&dir);
}
