//! Protocol orchestration: regimen grids, ratio-zero degeneracy, the
//! gate loop, and the stabilizer ablation.

use ganforge_data::split::{split, SplitSpec};
use ganforge_data::{toy, Dataset, SampleSource, SplitTag};
use ganforge_gan::TrainConfig;
use ganforge_harness::ablation::{ablation_markdown, stabilizer_ablation, AblationConfig};
use ganforge_harness::protocol::{results_to_csv, results_to_markdown, run_protocol, SynthPools};
use ganforge_harness::{gate_loop, train_per_class_gans, ClassifierConfig, GateLoopConfig, ProtocolConfig, Regimen};
use ganforge_metrics::GateThresholds;

fn tiny_protocol_cfg(seeds: Vec<u64>) -> ProtocolConfig {
    ProtocolConfig {
        seeds,
        classifier: ClassifierConfig { epochs: 2, batch_size: 8, lr: 1e-3, width: 2, seed: 0 },
        classical_policy_seed: 5,
        positive_class: None,
        specificity_target: 0.9,
    }
}

fn splits_for_test() -> ganforge_data::split::DatasetSplits {
    let ds = toy::synth_glyphs(2, 24, 0.5, 3).unwrap();
    split(&ds, &SplitSpec { fractions: (0.5, 0.25, 0.25), seed: 1, stratified: true }).unwrap()
}

fn synthetic_pool() -> Dataset {
    let ds = toy::synth_glyphs(2, 24, 0.9, 77).unwrap();
    let n = ds.len();
    Dataset::with_sources(
        ds.images,
        ds.labels,
        vec![SampleSource::Synthetic; n],
        ds.class_names,
        SplitTag::Full,
        "synthetic-pool",
    )
    .unwrap()
}

#[test]
fn real_only_regimen_yields_one_row_per_seed() {
    let splits = splits_for_test();
    let cfg = tiny_protocol_cfg(vec![0, 1, 2]);
    let results = run_protocol(&splits, None, &[Regimen::Real], &cfg).unwrap();
    assert_eq!(results.len(), 3);
    assert!(results.iter().all(|r| r.regimen == "real" && r.n_train_synth == 0));
}

#[test]
fn ratio_zero_gan_regimen_equals_real_bit_exactly() {
    let splits = splits_for_test();
    let pool = synthetic_pool();
    let filtered = pool.clone();
    let pools = SynthPools { full: &pool, filtered: &filtered };
    let cfg = tiny_protocol_cfg(vec![0, 1]);
    let regimens = [Regimen::Real, Regimen::Gan { ratio: 0.0, filtered: false }];
    let results = run_protocol(&splits, Some(&pools), &regimens, &cfg).unwrap();
    for seed in [0u64, 1] {
        let real = results.iter().find(|r| r.regimen == "real" && r.seed == seed).unwrap();
        let gan = results
            .iter()
            .find(|r| r.regimen.starts_with("gan") && r.seed == seed)
            .unwrap();
        assert_eq!(real.accuracy.to_bits(), gan.accuracy.to_bits(), "seed {seed}");
        assert_eq!(real.macro_f1.to_bits(), gan.macro_f1.to_bits(), "seed {seed}");
    }
}

#[test]
fn protocol_emits_paper_shaped_table() {
    let splits = splits_for_test();
    let pool = synthetic_pool();
    let filtered = pool.clone();
    let pools = SynthPools { full: &pool, filtered: &filtered };
    let cfg = tiny_protocol_cfg(vec![0]);
    let regimens = [
        Regimen::Real,
        Regimen::Classical,
        Regimen::Gan { ratio: 0.5, filtered: false },
    ];
    let results = run_protocol(&splits, Some(&pools), &regimens, &cfg).unwrap();
    let csv = results_to_csv(&results);
    let header = csv.lines().next().unwrap();
    for col in ["regimen", "accuracy", "macro_f1", "auroc", "sens_at_spec"] {
        assert!(header.contains(col), "missing column {col}");
    }
    let md = results_to_markdown(&results);
    assert!(md.contains("| real |"));
    assert!(md.contains("| classical |"));
    assert!(md.contains("gan(ratio=0.5"));
}

#[test]
fn protocol_is_deterministic_across_runs() {
    let splits = splits_for_test();
    let cfg = tiny_protocol_cfg(vec![3, 4]);
    let a = run_protocol(&splits, None, &[Regimen::Real, Regimen::Classical], &cfg).unwrap();
    let b = run_protocol(&splits, None, &[Regimen::Real, Regimen::Classical], &cfg).unwrap();
    assert_eq!(results_to_csv(&a), results_to_csv(&b));
}

#[test]
fn gate_loop_passes_with_permissive_thresholds_and_filters_half() {
    let dir = std::env::temp_dir().join(format!("ganforge-gateloop-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let ds = toy::synth_glyphs(2, 8, 0.5, 5).unwrap();
    let gan_cfg = TrainConfig {
        epochs: 1,
        batch_size: 4,
        latent_dim: 8,
        width: 2,
        seed: 3,
        checkpoint_interval: 1,
        grid_interval: 100,
        ..TrainConfig::default()
    };
    let mut ckpts = train_per_class_gans(&ds, &gan_cfg, &dir).unwrap();
    assert_eq!(ckpts.len(), 2);
    let loop_cfg = GateLoopConfig {
        pool_per_class: 8,
        round_epochs: 1,
        max_rounds: 1,
        report: ganforge_metrics::ReportParams { kid_subsets: 10, ..Default::default() },
        ..GateLoopConfig::default()
    };
    let gated = gate_loop(&ds, &mut ckpts, &gan_cfg, &loop_cfg, &dir).unwrap();
    assert_eq!(gated.full.len(), 16);
    assert_eq!(gated.rounds_used, 0);
    // Per-class median filtering keeps ceil(8/2) = 4 per class.
    assert_eq!(gated.filtered.len(), 8);
    assert!(gated.full.sources.iter().all(|s| *s == SampleSource::Synthetic));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn gate_loop_exhausts_on_impossible_thresholds() {
    let dir = std::env::temp_dir().join(format!("ganforge-gateloop-fail-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let ds = toy::synth_glyphs(2, 8, 0.5, 5).unwrap();
    let gan_cfg = TrainConfig {
        epochs: 1,
        batch_size: 4,
        latent_dim: 8,
        width: 2,
        seed: 3,
        checkpoint_interval: 1,
        grid_interval: 100,
        ..TrainConfig::default()
    };
    let mut ckpts = train_per_class_gans(&ds, &gan_cfg, &dir).unwrap();
    let loop_cfg = GateLoopConfig {
        thresholds: GateThresholds { fid_max: 0.0, precision_min: 1.1 },
        pool_per_class: 8,
        round_epochs: 1,
        max_rounds: 1,
        report: ganforge_metrics::ReportParams { kid_subsets: 5, ..Default::default() },
        ..GateLoopConfig::default()
    };
    let err = gate_loop(&ds, &mut ckpts, &gan_cfg, &loop_cfg, &dir).unwrap_err().to_string();
    assert!(err.contains("quality gate failed"), "{err}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn stabilizer_ablation_reports_four_cells_with_deltas() {
    let ds = toy::synth_glyphs(2, 8, 0.5, 9).unwrap();
    let cfg = AblationConfig {
        base: TrainConfig {
            epochs: 1,
            batch_size: 8,
            latent_dim: 8,
            width: 2,
            seed: 1,
            checkpoint_interval: 100,
            grid_interval: 100,
            ..TrainConfig::default()
        },
        lambda: 10.0,
        eval_samples: 16,
        feature_dim: 16,
    };
    let report = stabilizer_ablation(&ds, &cfg).unwrap();
    assert_eq!(report.cells.len(), 4);
    let modes: Vec<&str> = report.cells.iter().map(|c| c.mode.as_str()).collect();
    assert_eq!(modes, ["vanilla", "vanilla+sn", "wgan-gp", "wgan-gp+sn"]);
    assert!(report.cells.iter().all(|c| c.fid.is_finite()));
    assert!(report.cells[0].fid_delta_vs_vanilla_pct.is_none());
    assert!(report.cells[1..].iter().all(|c| c.fid_delta_vs_vanilla_pct.is_some()));
    let md = ablation_markdown(&report);
    assert!(md.contains("| vanilla |"));
    assert!(md.contains("delta vs vanilla"));
}
