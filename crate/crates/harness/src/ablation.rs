//! Stabilizer on/off grid: train the same pair under vanilla, spectral
//! normalization, gradient penalty, and both, then report final FID and
//! deltas relative to the vanilla baseline. The numbers are reported, not
//! asserted.

use ganforge_data::Dataset;
use ganforge_gan::{generate, train, LossMode, TrainConfig};
use ganforge_metrics::{extract_features, fid, RandomProjection, Source};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationCell {
    pub mode: String,
    pub fid: f64,
    /// Percent change relative to the vanilla baseline (negative = better).
    pub fid_delta_vs_vanilla_pct: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationReport {
    pub cells: Vec<AblationCell>,
    pub extractor_id: String,
    pub eval_samples: usize,
}

#[derive(Clone, Debug)]
pub struct AblationConfig {
    pub base: TrainConfig,
    pub lambda: f64,
    pub eval_samples: usize,
    pub feature_dim: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig { base: TrainConfig::default(), lambda: 10.0, eval_samples: 128, feature_dim: 64 }
    }
}

/// Run the 2x2 grid with one shared seed and report FID against the real
/// set under a fixed random-projection feature space.
pub fn stabilizer_ablation(data: &Dataset, cfg: &AblationConfig) -> Result<AblationReport> {
    let grid = [
        ("vanilla", LossMode::Vanilla, false),
        ("vanilla+sn", LossMode::Vanilla, true),
        ("wgan-gp", LossMode::WganGp { lambda: cfg.lambda }, false),
        ("wgan-gp+sn", LossMode::WganGp { lambda: cfg.lambda }, true),
    ];
    let extractor = RandomProjection {
        dim: cfg.feature_dim,
        seed: ganforge_core::derive_seed(cfg.base.seed, "ablation-features"),
    };
    let real_features = extract_features(&data.images, &extractor, Source::Real)?;
    let mut cells = Vec::new();
    let mut vanilla_fid = None;
    for (label, loss, sn) in grid {
        let run_cfg = TrainConfig { loss, spectral_norm: sn, ..cfg.base.clone() };
        let mut result = train(&run_cfg, data, None)?;
        let samples = generate(
            &mut result.generator,
            cfg.eval_samples,
            ganforge_core::derive_seed(cfg.base.seed, "ablation-eval"),
        )?;
        let fake_features = extract_features(&samples, &extractor, Source::Synthetic)?;
        let d = fid(&real_features, &fake_features)?;
        if label == "vanilla" {
            vanilla_fid = Some(d);
        }
        let delta = vanilla_fid
            .filter(|&v| label != "vanilla" && v > 0.0)
            .map(|v| (d - v) / v * 100.0);
        cells.push(AblationCell { mode: label.into(), fid: d, fid_delta_vs_vanilla_pct: delta });
    }
    Ok(AblationReport {
        cells,
        extractor_id: format!("rp:{}", cfg.feature_dim),
        eval_samples: cfg.eval_samples,
    })
}

pub fn ablation_markdown(report: &AblationReport) -> String {
    let mut out = String::from("| mode | fid | delta vs vanilla |\n|---|---|---|\n");
    for c in &report.cells {
        let delta = c
            .fid_delta_vs_vanilla_pct
            .map(|d| format!("{d:+.1}%"))
            .unwrap_or_else(|| "baseline".into());
        out.push_str(&format!("| {} | {:.6} | {} |\n", c.mode, c.fid, delta));
    }
    out.push_str(&format!(
        "\nFeatures: {}; {} generated samples per cell.\n",
        report.extractor_id, report.eval_samples
    ));
    out
}

pub fn ablation_csv(report: &AblationReport) -> String {
    let mut out = String::from("mode,fid,fid_delta_vs_vanilla_pct\n");
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{}\n",
            c.mode,
            c.fid,
            c.fid_delta_vs_vanilla_pct.map(|d| d.to_string()).unwrap_or_default()
        ));
    }
    out
}
