//! `ganforge train-gan`: adversarial training with checkpoints, per-epoch
//! sample grids, and the history CSV.

use ganforge_data::cache;
use ganforge_gan::train::TrainOutputs;
use ganforge_gan::{train, AdamParams, LossMode, TrainConfig};

use crate::config::{resolve_seed, write_resolved, FileConfig};
use crate::errors::{CliError, Result};
use crate::CommonArgs;

#[derive(clap::Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset cache directory (from `ganforge dataset`).
    #[arg(long)]
    pub data: std::path::PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub latent: Option<usize>,
    /// Discriminator steps per generator step.
    #[arg(long)]
    pub k: Option<usize>,
    /// Loss mode: `vanilla` or `wgan-gp`.
    #[arg(long)]
    pub loss: Option<String>,
    /// Gradient-penalty weight (wgan-gp only).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Enable spectral normalization on discriminator convolutions.
    #[arg(long)]
    pub sn: bool,
    #[arg(long)]
    pub sn_iters: Option<usize>,
    /// Channel base width (64 = reference architecture).
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    #[arg(long)]
    pub grid_every: Option<usize>,
}

pub fn build_train_config(
    file: &FileConfig,
    seed: u64,
    epochs: Option<usize>,
    batch: Option<usize>,
    latent: Option<usize>,
    k: Option<usize>,
    loss: Option<&str>,
    lambda: Option<f64>,
    sn_flag: bool,
    sn_iters: Option<usize>,
    width: Option<usize>,
    lr: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    checkpoint_every: Option<usize>,
    grid_every: Option<usize>,
) -> Result<TrainConfig> {
    let sec = &file.train;
    let defaults = TrainConfig::default();
    let loss_name = loss
        .map(str::to_string)
        .or_else(|| sec.loss.clone())
        .unwrap_or_else(|| "vanilla".into());
    let lambda = lambda.or(sec.lambda).unwrap_or(10.0);
    let loss = match loss_name.as_str() {
        "vanilla" => LossMode::Vanilla,
        "wgan-gp" | "wgan_gp" => LossMode::WganGp { lambda },
        other => return Err(CliError::validation(format!("unknown loss mode {other:?}"))),
    };
    let adam_defaults = AdamParams::default();
    Ok(TrainConfig {
        epochs: epochs.or(sec.epochs).unwrap_or(defaults.epochs),
        batch_size: batch.or(sec.batch_size).unwrap_or(defaults.batch_size),
        latent_dim: latent.or(sec.latent_dim).unwrap_or(defaults.latent_dim),
        k_disc_steps: k.or(sec.k_disc_steps).unwrap_or(defaults.k_disc_steps),
        adam: AdamParams {
            lr: lr.or(sec.lr).unwrap_or(adam_defaults.lr),
            beta1: beta1.or(sec.beta1).unwrap_or(adam_defaults.beta1),
            beta2: beta2.or(sec.beta2).unwrap_or(adam_defaults.beta2),
            eps: adam_defaults.eps,
        },
        loss,
        spectral_norm: sn_flag || sec.spectral_norm.unwrap_or(false),
        sn_power_iters: sn_iters.or(sec.sn_power_iters).unwrap_or(defaults.sn_power_iters),
        width: width.or(sec.width).unwrap_or(defaults.width),
        seed,
        checkpoint_interval: checkpoint_every
            .or(sec.checkpoint_interval)
            .unwrap_or(defaults.checkpoint_interval),
        grid_interval: grid_every.or(sec.grid_interval).unwrap_or(defaults.grid_interval),
    })
}

pub fn run(args: TrainArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve_seed(args.common.seed, file.seed)?;
    let cfg = build_train_config(
        &file,
        seed,
        args.epochs,
        args.batch,
        args.latent,
        args.k,
        args.loss.as_deref(),
        args.lambda,
        args.sn,
        args.sn_iters,
        args.width,
        args.lr,
        args.beta1,
        args.beta2,
        args.checkpoint_every,
        args.grid_every,
    )?;
    cfg.validate().map_err(crate::errors::CliError::from)?;
    write_resolved(&args.common.out, &cfg)?;
    println!(
        "train-gan: mode {} | epochs {} | batch {} | latent {} | k {} | width {}",
        cfg.mode_label(),
        cfg.epochs,
        cfg.batch_size,
        cfg.latent_dim,
        cfg.k_disc_steps,
        cfg.width
    );
    let data = cache::load_dataset(&args.data)?;
    let outputs = TrainOutputs { dir: args.common.out.clone() };
    let result = train(&cfg, &data, Some(&outputs))?;
    std::fs::write(args.common.out.join("history.csv"), result.history.to_csv())?;
    println!(
        "trained {} epochs: {} discriminator steps, {} generator steps, {} checkpoints",
        cfg.epochs,
        result.d_steps,
        result.g_steps,
        result.checkpoints.len()
    );
    Ok(())
}
