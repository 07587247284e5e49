//! `ganforge protocol`: the full downstream pipeline — per-class GAN
//! training (or supplied checkpoints), the bounded quality-gate loop,
//! regimen runs over a seed grid, and report emission. With
//! `--ablate-stabilizers` it instead runs the WGAN-GP / spectral-norm
//! on-off grid and reports relative FID deltas.

use std::path::PathBuf;

use ganforge_core::derive_seed;
use ganforge_data::cache;
use ganforge_data::split::{split, SplitSpec};
use ganforge_harness::ablation::{ablation_csv, ablation_markdown, stabilizer_ablation, AblationConfig};
use ganforge_harness::classifier::save_classifier;
use ganforge_harness::protocol::{results_to_csv, results_to_markdown, SynthPools};
use ganforge_harness::{
    gate_loop, run_protocol, train_classifier, train_per_class_gans, AugPolicy, ClassifierConfig,
    GateLoopConfig, ProtocolConfig, Regimen,
};
use ganforge_metrics::GateThresholds;
use serde::Serialize;

use crate::commands::train::build_train_config;
use crate::config::{resolve_seed, write_resolved, FileConfig};
use crate::errors::{CliError, Result};
use crate::CommonArgs;

#[derive(clap::Args)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: PathBuf,
    /// Directory holding `class_<id>.gfc` per-class GAN checkpoints.
    #[arg(long, conflicts_with = "train_first")]
    pub checkpoints: Option<PathBuf>,
    /// Train the per-class GANs before running the protocol.
    #[arg(long)]
    pub train_first: bool,
    /// Comma-separated synthetic-to-real ratios.
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    /// Number of protocol seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Use the gate-filtered pool for GAN regimens.
    #[arg(long)]
    pub filtered: bool,
    /// Comma-separated regimens from {real, classical, gan}.
    #[arg(long, value_delimiter = ',')]
    pub regimens: Option<Vec<String>>,
    #[arg(long)]
    pub gan_epochs: Option<usize>,
    #[arg(long)]
    pub gan_batch: Option<usize>,
    #[arg(long)]
    pub gan_width: Option<usize>,
    #[arg(long)]
    pub gan_loss: Option<String>,
    #[arg(long)]
    pub gan_sn: bool,
    #[arg(long)]
    pub round_epochs: Option<usize>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub pool_per_class: Option<usize>,
    #[arg(long)]
    pub gate_fid_max: Option<f64>,
    #[arg(long)]
    pub gate_precision_min: Option<f64>,
    #[arg(long)]
    pub classifier_epochs: Option<usize>,
    #[arg(long)]
    pub classifier_width: Option<usize>,
    /// Run the stabilizer on/off grid instead of the classifier protocol.
    #[arg(long)]
    pub ablate_stabilizers: bool,
}

#[derive(Serialize)]
struct Resolved {
    command: &'static str,
    seed: u64,
    regimens: Vec<String>,
    ratios: Vec<f64>,
    seeds: usize,
    filtered: bool,
    fractions: (f64, f64, f64),
    gan: ganforge_gan::TrainConfig,
    round_epochs: usize,
    max_rounds: usize,
    pool_per_class: usize,
    gate_fid_max: f64,
    gate_precision_min: f64,
    classifier_epochs: usize,
    classifier_width: usize,
    ablate_stabilizers: bool,
}

pub fn run(args: ProtocolArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve_seed(args.common.seed, file.seed)?;
    let sec = &file.protocol;

    let ratios = args.ratios.or_else(|| sec.ratios.clone()).unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    let n_seeds = args.seeds.or(sec.seeds).unwrap_or(5);
    let filtered = args.filtered || sec.filtered.unwrap_or(false);
    let regimen_names = args
        .regimens
        .or_else(|| sec.regimens.clone())
        .unwrap_or_else(|| vec!["real".into(), "classical".into(), "gan".into()]);
    let fractions = (
        sec.train_fraction.unwrap_or(0.6),
        sec.val_fraction.unwrap_or(0.2),
        sec.test_fraction.unwrap_or(0.2),
    );
    let gan_cfg = build_train_config(
        &file,
        derive_seed(seed, "protocol-gan"),
        args.gan_epochs.or(sec.gan_epochs).or(Some(60)),
        args.gan_batch,
        None,
        None,
        args.gan_loss.as_deref(),
        None,
        args.gan_sn,
        None,
        args.gan_width,
        None,
        None,
        None,
        None,
        None,
    )?;
    let round_epochs = args.round_epochs.or(sec.round_epochs).unwrap_or(20);
    let max_rounds = args.max_rounds.or(sec.max_rounds).unwrap_or(3);
    let pool_per_class = args.pool_per_class.or(sec.pool_per_class).unwrap_or(64);
    let thresholds = GateThresholds {
        fid_max: args.gate_fid_max.or(sec.gate_fid_max).unwrap_or(f64::INFINITY),
        precision_min: args.gate_precision_min.or(sec.gate_precision_min).unwrap_or(0.0),
    };
    let classifier = ClassifierConfig {
        epochs: args.classifier_epochs.or(sec.classifier_epochs).unwrap_or(50),
        batch_size: sec.classifier_batch.unwrap_or(16),
        lr: sec.classifier_lr.unwrap_or(1e-3),
        width: args.classifier_width.or(sec.classifier_width).unwrap_or(32),
        seed: 0,
    };

    let mut regimens: Vec<Regimen> = Vec::new();
    for name in &regimen_names {
        match name.as_str() {
            "real" => regimens.push(Regimen::Real),
            "classical" => regimens.push(Regimen::Classical),
            "gan" => {
                for &r in &ratios {
                    regimens.push(Regimen::Gan { ratio: r, filtered });
                }
            }
            other => return Err(CliError::validation(format!("unknown regimen {other:?}"))),
        }
    }

    let resolved = Resolved {
        command: "protocol",
        seed,
        regimens: regimen_names.clone(),
        ratios: ratios.clone(),
        seeds: n_seeds,
        filtered,
        fractions,
        gan: gan_cfg.clone(),
        round_epochs,
        max_rounds,
        pool_per_class,
        gate_fid_max: thresholds.fid_max,
        gate_precision_min: thresholds.precision_min,
        classifier_epochs: classifier.epochs,
        classifier_width: classifier.width,
        ablate_stabilizers: args.ablate_stabilizers,
    };
    write_resolved(&args.common.out, &resolved)?;

    let data = cache::load_dataset(&args.data)?;

    if args.ablate_stabilizers {
        let cfg = AblationConfig {
            base: gan_cfg,
            lambda: 10.0,
            eval_samples: pool_per_class * data.n_classes(),
            feature_dim: 64,
        };
        let report = stabilizer_ablation(&data, &cfg)?;
        std::fs::write(args.common.out.join("ablation.md"), ablation_markdown(&report))?;
        std::fs::write(args.common.out.join("ablation.csv"), ablation_csv(&report))?;
        println!("{}", ablation_markdown(&report));
        return Ok(());
    }

    let splits = split(&data, &SplitSpec { fractions, seed: derive_seed(seed, "protocol-split"), stratified: true })?;
    println!(
        "splits: train {} / val {} / test {}",
        splits.train.len(),
        splits.val.as_ref().map(|d| d.len()).unwrap_or(0),
        splits.test.as_ref().map(|d| d.len()).unwrap_or(0)
    );

    let needs_gan = regimens.iter().any(|r| matches!(r, Regimen::Gan { .. }));
    let pools_storage;
    let pools = if needs_gan {
        let gans_dir = args.common.out.join("gans");
        let mut checkpoints = if args.train_first {
            train_per_class_gans(&splits.train, &gan_cfg, &gans_dir)?
        } else if let Some(dir) = &args.checkpoints {
            (0..splits.train.n_classes())
                .map(|c| {
                    let p = dir.join(format!("class_{c}.gfc"));
                    if p.exists() {
                        Ok(p)
                    } else {
                        Err(CliError::missing(format!("missing per-class checkpoint {}", p.display())))
                    }
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            return Err(CliError::missing(
                "GAN regimens need --checkpoints DIR or --train-first",
            ));
        };
        let loop_cfg = GateLoopConfig {
            thresholds,
            max_rounds,
            round_epochs,
            pool_per_class,
            feature_dim: 64,
            report: ganforge_metrics::ReportParams {
                seed: derive_seed(seed, "gate-kid"),
                ..Default::default()
            },
        };
        let gated = gate_loop(&splits.train, &mut checkpoints, &gan_cfg, &loop_cfg, &gans_dir)?;
        println!(
            "quality gate passed after {} refinement rounds: fid {:.6}, precision {:.3} ({} -> {} filtered)",
            gated.rounds_used,
            gated.report.fid,
            gated.report.precision,
            gated.full.len(),
            gated.filtered.len()
        );
        std::fs::write(args.common.out.join("gate_report.json"), gated.report.to_json())?;
        pools_storage = gated;
        Some(SynthPools { full: &pools_storage.full, filtered: &pools_storage.filtered })
    } else {
        None
    };

    let proto_cfg = ProtocolConfig {
        seeds: (0..n_seeds as u64).map(|i| derive_seed(seed, &format!("protocol-seed/{i}"))).collect(),
        classifier,
        classical_policy_seed: derive_seed(seed, "classical-policy"),
        positive_class: sec.positive_class,
        specificity_target: sec.specificity_target.unwrap_or(0.9),
    };
    let results = run_protocol(&splits, pools.as_ref(), &regimens, &proto_cfg)?;
    std::fs::write(args.common.out.join("results.csv"), results_to_csv(&results))?;
    std::fs::write(args.common.out.join("results.md"), results_to_markdown(&results))?;
    for r in &results {
        let cell = serde_json::to_string_pretty(r).expect("cell serializes");
        let name = format!(
            "cell_{}_{}.json",
            r.regimen.replace(['(', ')', '=', ',', '.'], "_"),
            r.seed
        );
        std::fs::write(args.common.out.join(name), cell)?;
    }

    // A real-only classifier on the first seed, for the
    // classifier-features extractor in evaluate/embed.
    let first_seed = proto_cfg.seeds[0];
    let cls_cfg = ClassifierConfig { seed: derive_seed(first_seed, "protocol-classifier"), ..proto_cfg.classifier.clone() };
    let trained = train_classifier(&splits.train, splits.val.as_ref(), &AugPolicy::none(first_seed), &cls_cfg)?;
    save_classifier(&args.common.out.join("classifier.gfc"), &trained.classifier)?;

    println!("{}", results_to_markdown(&results));
    Ok(())
}
