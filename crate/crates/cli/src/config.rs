//! Config file handling: TOML sections mirror the command-line flags,
//! with precedence default < GANFORGE_SEED < file < flags. The fully
//! resolved configuration is serialized into the output directory before
//! any work happens, so a crashed run is diagnosable from disk.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::errors::{CliError, Result};

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub embed: EmbedSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub toy: Option<String>,
    pub classes: Option<usize>,
    pub per_class: Option<usize>,
    pub noise: Option<f64>,
    pub channels: Option<usize>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub latent_dim: Option<usize>,
    pub k_disc_steps: Option<usize>,
    pub loss: Option<String>,
    pub lambda: Option<f64>,
    pub spectral_norm: Option<bool>,
    pub sn_power_iters: Option<usize>,
    pub width: Option<usize>,
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub checkpoint_interval: Option<usize>,
    pub grid_interval: Option<usize>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateSection {
    pub extractor: Option<String>,
    pub n_samples: Option<usize>,
    pub kid_subset: Option<usize>,
    pub kid_subsets: Option<usize>,
    pub pr_k: Option<usize>,
    pub is_splits: Option<usize>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedSection {
    pub method: Option<String>,
    pub extractor: Option<String>,
    pub perplexity: Option<f64>,
    pub iters: Option<usize>,
    pub eta: Option<f64>,
    pub exaggeration: Option<bool>,
    pub n_synth: Option<usize>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub ratios: Option<Vec<f64>>,
    pub seeds: Option<usize>,
    pub filtered: Option<bool>,
    pub regimens: Option<Vec<String>>,
    pub train_fraction: Option<f64>,
    pub val_fraction: Option<f64>,
    pub test_fraction: Option<f64>,
    pub gan_epochs: Option<usize>,
    pub round_epochs: Option<usize>,
    pub max_rounds: Option<usize>,
    pub pool_per_class: Option<usize>,
    pub gate_fid_max: Option<f64>,
    pub gate_precision_min: Option<f64>,
    pub classifier_epochs: Option<usize>,
    pub classifier_width: Option<usize>,
    pub classifier_lr: Option<f64>,
    pub classifier_batch: Option<usize>,
    pub positive_class: Option<usize>,
    pub specificity_target: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::missing(format!("config {}: {e}", p.display()))
                })?;
                parse_config(&text)
            }
        }
    }
}

pub fn parse_config(text: &str) -> Result<FileConfig> {
    toml::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
}

/// Seed precedence: explicit flag, then config file, then GANFORGE_SEED,
/// then zero.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = file {
        return Ok(s);
    }
    match std::env::var("GANFORGE_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|_| CliError::validation(format!("GANFORGE_SEED {v:?} is not a u64"))),
        Err(_) => Ok(0),
    }
}

/// Serialize any resolved-config struct into `out/config.toml` before work
/// begins.
pub fn write_resolved<T: Serialize>(out_dir: &Path, resolved: &T) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let text = toml::to_string_pretty(resolved)
        .map_err(|e| CliError::validation(format!("serialize config: {e}")))?;
    std::fs::write(out_dir.join("config.toml"), text)?;
    Ok(())
}
