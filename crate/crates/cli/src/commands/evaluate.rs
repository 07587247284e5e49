//! `ganforge evaluate`: IS/FID/KID/precision/recall for a checkpoint (or
//! a real-vs-real self-test), plus the real/fake score curve across all
//! checkpoints in the same directory.

use std::path::PathBuf;

use ganforge_core::derive_seed;
use ganforge_data::cache;
use ganforge_gan::checkpoint::load_gan_checkpoint;
use ganforge_gan::generate;
use ganforge_metrics::curve::{curve_to_csv, real_fake_curve};
use ganforge_metrics::{compute_report, extract_features, ReportParams, Source};
use serde::Serialize;

use crate::config::{resolve_seed, write_resolved, FileConfig};
use crate::errors::{CliError, Result};
use crate::extractors::parse_extractor;
use crate::CommonArgs;

#[derive(clap::Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: PathBuf,
    /// GAN checkpoint to score (not needed with --self-test).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Feature extractor: `classifier:PATH`, `raw-pixels`, or `rp:D`.
    #[arg(long)]
    pub extractor: Option<String>,
    /// Generated sample count.
    #[arg(long)]
    pub n_samples: Option<usize>,
    /// Score the real set against itself instead of generated samples.
    #[arg(long)]
    pub self_test: bool,
    /// Also score every checkpoint in the checkpoint's directory into a
    /// real/fake score curve CSV (vanilla discriminators only).
    #[arg(long)]
    pub curve: bool,
}

#[derive(Serialize)]
struct Resolved {
    command: &'static str,
    seed: u64,
    extractor: String,
    n_samples: usize,
    self_test: bool,
    checkpoint: Option<String>,
    kid_subset: usize,
    kid_subsets: usize,
    pr_k: usize,
    is_splits: usize,
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve_seed(args.common.seed, file.seed)?;
    let sec = &file.evaluate;
    let extractor_spec = args
        .extractor
        .or_else(|| sec.extractor.clone())
        .unwrap_or_else(|| "classifier".into());
    let n_samples = args.n_samples.or(sec.n_samples).unwrap_or(128);
    let params = ReportParams {
        kid_subset: sec.kid_subset.unwrap_or(50),
        kid_subsets: sec.kid_subsets.unwrap_or(100),
        pr_k: sec.pr_k.unwrap_or(3),
        is_splits: sec.is_splits.unwrap_or(10),
        seed: derive_seed(seed, "kid"),
    };
    if !args.self_test && args.checkpoint.is_none() {
        return Err(CliError::missing("either --checkpoint or --self-test is required"));
    }
    let resolved = Resolved {
        command: "evaluate",
        seed,
        extractor: extractor_spec.clone(),
        n_samples,
        self_test: args.self_test,
        checkpoint: args.checkpoint.as_ref().map(|p| p.display().to_string()),
        kid_subset: params.kid_subset,
        kid_subsets: params.kid_subsets,
        pr_k: params.pr_k,
        is_splits: params.is_splits,
    };
    write_resolved(&args.common.out, &resolved)?;

    let choice = parse_extractor(&extractor_spec)?;
    let data = cache::load_dataset(&args.data)?;
    let extractor = choice.as_extractor(seed);
    let real_features = extract_features(&data.images, extractor.as_ref(), Source::Real)?;

    let (fake_images, label) = if args.self_test {
        (data.images.clone(), "self-test: real vs real".to_string())
    } else {
        let path = args.checkpoint.as_ref().expect("checked above");
        let mut ckpt = load_gan_checkpoint(path)?;
        let samples = generate(&mut ckpt.generator, n_samples, derive_seed(seed, "eval-samples"))?;
        (samples, format!("checkpoint epoch {}", ckpt.header.epoch))
    };
    let fake_features = extract_features(&fake_images, extractor.as_ref(), Source::Synthetic)?;
    let probs = match choice.classifier() {
        Some(mut cls) => Some(cls.probs_value(&fake_images).map_err(CliError::from)?),
        None => None,
    };
    let report = compute_report(&real_features, &fake_features, probs.as_ref(), &params)?;
    std::fs::write(args.common.out.join("report.json"), report.to_json())?;
    std::fs::write(args.common.out.join("report.csv"), report.to_csv())?;
    println!(
        "evaluate ({label}): IS {:.4}±{:.4} | FID {:.6} | KID {:.6}±{:.6} | precision {:.3} | recall {:.3}",
        report.is_mean, report.is_std, report.fid, report.kid_mean, report.kid_std, report.precision, report.recall
    );

    if args.curve {
        let ckpt_path = args
            .checkpoint
            .as_ref()
            .ok_or_else(|| CliError::missing("--curve requires --checkpoint"))?;
        let dir = ckpt_path.parent().unwrap_or_else(|| std::path::Path::new("."));
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "gfc").unwrap_or(false))
            .collect();
        paths.sort();
        let checkpoints = paths
            .iter()
            .map(|p| load_gan_checkpoint(p))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let points = real_fake_curve(checkpoints, &data, n_samples, derive_seed(seed, "curve"))?;
        std::fs::write(args.common.out.join("score_curve.csv"), curve_to_csv(&points))?;
        println!("score curve over {} checkpoints written", points.len());
    }
    Ok(())
}
