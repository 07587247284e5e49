//! Minibatch adversarial training: `k` discriminator updates on fresh
//! noise and real minibatches, then one generator update on fresh noise,
//! per iteration. An epoch performs `floor(N / batch_size)` iterations, so
//! a run of `E` epochs takes exactly `E * B * k` discriminator steps and
//! `E * B` generator steps.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ganforge_core::{derive_seed, BnMode, Rng, Tape, Tensor};
use ganforge_data::Dataset;
use serde::{Deserialize, Serialize};

use crate::adam::{AdamParams, Optimizer};
use crate::builders::{build_discriminator, build_generator, DEFAULT_WIDTH};
use crate::checkpoint::{save_gan_checkpoint, GanCheckpoint};
use crate::error::{GanError, Result};
use crate::gp::gradient_penalty_on_tape;
use crate::losses::{vanilla_gen_loss, vanilla_losses, wgan_base_losses, wgan_gen_loss};
use crate::mosaic::write_sample_grid;
use crate::network::{Network, SnSetting};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    Vanilla,
    WganGp { lambda: f64 },
}

impl LossMode {
    pub fn is_critic(&self) -> bool {
        matches!(self, LossMode::WganGp { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            LossMode::Vanilla => "vanilla",
            LossMode::WganGp { .. } => "wgan-gp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub latent_dim: usize,
    pub k_disc_steps: usize,
    pub adam: AdamParams,
    pub loss: LossMode,
    pub spectral_norm: bool,
    pub sn_power_iters: usize,
    /// Channel base; 64 reproduces the reference widths.
    pub width: usize,
    pub seed: u64,
    pub checkpoint_interval: usize,
    pub grid_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            batch_size: 32,
            latent_dim: 100,
            k_disc_steps: 1,
            adam: AdamParams::default(),
            loss: LossMode::Vanilla,
            spectral_norm: false,
            sn_power_iters: 1,
            width: DEFAULT_WIDTH,
            seed: 0,
            checkpoint_interval: 50,
            grid_interval: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(GanError::Invalid("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(GanError::Invalid("batch_size must be at least 2".into()));
        }
        if self.latent_dim == 0 {
            return Err(GanError::Invalid("latent_dim must be at least 1".into()));
        }
        if self.k_disc_steps == 0 {
            return Err(GanError::Invalid("k_disc_steps must be at least 1".into()));
        }
        if let LossMode::WganGp { lambda } = self.loss {
            if lambda < 0.0 {
                return Err(GanError::Invalid(format!("lambda must be >= 0, got {lambda}")));
            }
        }
        if self.width == 0 || self.sn_power_iters == 0 {
            return Err(GanError::Invalid("width and sn_power_iters must be positive".into()));
        }
        self.adam.validate()
    }

    pub fn mode_label(&self) -> String {
        if self.spectral_norm {
            format!("{}+sn", self.loss.label())
        } else {
            self.loss.label().to_string()
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub d_real_mean: f64,
    pub d_fake_mean: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,d_loss,g_loss,d_real_mean,d_fake_mean,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.epoch, e.d_loss, e.g_loss, e.d_real_mean, e.d_fake_mean, e.seconds
            ));
        }
        out
    }
}

/// Where training artifacts land; `None` disables checkpoint/grid output.
#[derive(Clone, Debug)]
pub struct TrainOutputs {
    pub dir: PathBuf,
}

pub struct TrainResult {
    pub generator: Network,
    pub discriminator: Network,
    pub history: TrainHistory,
    pub d_steps: u64,
    pub g_steps: u64,
    pub checkpoints: Vec<PathBuf>,
}

/// Shuffled index stream over the dataset; reshuffles at pass boundaries.
/// Each pass shuffles a fresh identity permutation, so the order depends
/// only on the generator state at the pass start and checkpoint resume
/// replays the exact same batches.
struct BatchStream {
    n: usize,
    order: Vec<usize>,
    cursor: usize,
    rng: Rng,
    usable: usize,
}

impl BatchStream {
    fn new(n: usize, batch: usize, rng: Rng) -> Self {
        let usable = (n / batch) * batch;
        let mut s = BatchStream { n, order: Vec::new(), cursor: 0, rng, usable };
        s.reset_pass();
        s
    }

    fn reset_pass(&mut self) {
        self.order = (0..self.n).collect();
        self.rng.shuffle(&mut self.order);
        self.cursor = 0;
    }

    fn next(&mut self, batch: usize) -> Vec<usize> {
        if self.cursor + batch > self.usable {
            self.reset_pass();
        }
        let out = self.order[self.cursor..self.cursor + batch].to_vec();
        self.cursor += batch;
        out
    }
}

fn gather_batch(data: &Dataset, idx: &[usize]) -> Result<Tensor> {
    let samples: Vec<Tensor> = idx
        .iter()
        .map(|&i| data.images.slice_sample(i))
        .collect::<std::result::Result<_, _>>()
        .map_err(GanError::Tensor)?;
    Tensor::stack(&samples).map_err(GanError::Tensor)
}

fn noise_batch(rng: &mut Rng, n: usize, latent: usize) -> Tensor {
    Tensor::new(vec![n, latent, 1, 1], rng.normal_vec(n * latent, 0.0, 1.0)).unwrap()
}

pub(crate) struct TrainState {
    pub cfg: TrainConfig,
    pub gen: Network,
    pub disc: Network,
    pub opt_g: Optimizer,
    pub opt_d: Optimizer,
    pub epoch_done: usize,
    pub rng_noise: Rng,
    pub rng_shuffle: Rng,
    pub rng_gp: Rng,
    pub d_steps: u64,
    pub g_steps: u64,
    pub data_channels: usize,
}

impl TrainState {
    pub fn fresh(cfg: &TrainConfig, channels: usize) -> Result<Self> {
        let mut gen = build_generator(cfg.latent_dim, channels, cfg.width)?;
        gen.init(derive_seed(cfg.seed, "gen"));
        let mut disc = build_discriminator(channels, cfg.width, cfg.loss.is_critic())?;
        disc.init(derive_seed(cfg.seed, "disc"));
        Ok(TrainState {
            cfg: cfg.clone(),
            gen,
            disc,
            opt_g: Optimizer::new(cfg.adam),
            opt_d: Optimizer::new(cfg.adam),
            epoch_done: 0,
            rng_noise: Rng::new(derive_seed(cfg.seed, "noise")),
            rng_shuffle: Rng::new(derive_seed(cfg.seed, "shuffle")),
            rng_gp: Rng::new(derive_seed(cfg.seed, "gp-alpha")),
            d_steps: 0,
            g_steps: 0,
            data_channels: channels,
        })
    }
}

fn sn_setting(cfg: &TrainConfig) -> SnSetting {
    if cfg.spectral_norm {
        SnSetting::Update { power_iters: cfg.sn_power_iters }
    } else {
        SnSetting::Off
    }
}

/// Train a fresh generator/discriminator pair on `data`.
pub fn train(cfg: &TrainConfig, data: &Dataset, outputs: Option<&TrainOutputs>) -> Result<TrainResult> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(GanError::Invalid("training dataset is empty".into()));
    }
    let state = TrainState::fresh(cfg, data.channels())?;
    run_epochs(state, data, cfg.epochs, outputs)
}

/// Continue a checkpointed run for `extra_epochs` more epochs.
pub fn resume(ckpt: GanCheckpoint, data: &Dataset, extra_epochs: usize, outputs: Option<&TrainOutputs>) -> Result<TrainResult> {
    let state = ckpt.into_state()?;
    let until = state.epoch_done + extra_epochs;
    run_epochs(state, data, until, outputs)
}

pub(crate) fn run_epochs(
    mut st: TrainState,
    data: &Dataset,
    until_epoch: usize,
    outputs: Option<&TrainOutputs>,
) -> Result<TrainResult> {
    let cfg = st.cfg.clone();
    let b = cfg.batch_size;
    let batches_per_epoch = data.len() / b;
    if batches_per_epoch == 0 {
        return Err(GanError::Invalid(format!(
            "dataset of {} samples is smaller than one batch of {b}",
            data.len()
        )));
    }
    if data.channels() != st.data_channels {
        return Err(GanError::Invalid(format!(
            "checkpoint expects {}-channel data, dataset has {}",
            st.data_channels,
            data.channels()
        )));
    }
    let sn = sn_setting(&cfg);
    let grid_noise = {
        let mut r = Rng::new(derive_seed(cfg.seed, "grid"));
        noise_batch(&mut r, 16, cfg.latent_dim)
    };
    let mut stream = BatchStream::new(data.len(), b, st.rng_shuffle.clone());
    let mut history = TrainHistory::default();
    let mut checkpoints = Vec::new();

    if let Some(out) = outputs {
        std::fs::create_dir_all(&out.dir)?;
    }

    for epoch in (st.epoch_done + 1)..=until_epoch {
        let started = Instant::now();
        let mut sum_d_loss = 0.0;
        let mut sum_g_loss = 0.0;
        let mut sum_dr = 0.0;
        let mut sum_df = 0.0;
        let mut d_batches = 0usize;
        for iteration in 0..batches_per_epoch {
            for _ in 0..cfg.k_disc_steps {
                let real = gather_batch(data, &stream.next(b))?;
                let z = noise_batch(&mut st.rng_noise, b, cfg.latent_dim);
                let fake = st.gen.forward_value(&z, BnMode::Train, SnSetting::Off)?;

                let mut tape = Tape::new();
                let dbound = st.disc.bind(&mut tape, true, sn)?;
                let real_id = tape.leaf(real.clone(), false);
                let fake_id = tape.leaf(fake.clone(), false);
                let dr = st.disc.forward(&mut tape, &dbound, real_id, BnMode::Train)?;
                let df = st.disc.forward(&mut tape, &dbound, fake_id, BnMode::Train)?;
                let d_loss = match cfg.loss {
                    LossMode::Vanilla => vanilla_losses(&mut tape, dr, df)?.0,
                    LossMode::WganGp { lambda } => {
                        let (base, _) = wgan_base_losses(&mut tape, dr, df)?;
                        let pen = gradient_penalty_on_tape(
                            &mut tape, &mut st.disc, &dbound, &real, &fake, lambda, &mut st.rng_gp,
                        )?;
                        tape.add(base, pen).map_err(GanError::Tensor)?
                    }
                };
                let d_loss_v = tape.value(d_loss).scalar_value().map_err(GanError::Tensor)?;
                if !d_loss_v.is_finite() {
                    return Err(GanError::Training {
                        epoch,
                        iteration,
                        reason: format!("discriminator loss became {d_loss_v}"),
                    });
                }
                let grads = tape.backward(d_loss).map_err(GanError::Tensor)?;
                let named = dbound.named_grads(&grads);
                st.opt_d.step(&mut st.disc.params, &named)?;
                st.d_steps += 1;

                sum_d_loss += d_loss_v;
                sum_dr += tape.value(dr).data().iter().sum::<f64>() / b as f64;
                sum_df += tape.value(df).data().iter().sum::<f64>() / b as f64;
                d_batches += 1;
            }

            // Generator update on fresh noise; discriminator parameters
            // enter as constants.
            let z = noise_batch(&mut st.rng_noise, b, cfg.latent_dim);
            let mut tape = Tape::new();
            let gbound = st.gen.bind(&mut tape, true, SnSetting::Off)?;
            let dbound = st.disc.bind(&mut tape, false, sn)?;
            let z_id = tape.leaf(z, false);
            let fake = st.gen.forward(&mut tape, &gbound, z_id, BnMode::Train)?;
            let df = st.disc.forward(&mut tape, &dbound, fake, BnMode::Train)?;
            let g_loss = match cfg.loss {
                LossMode::Vanilla => vanilla_gen_loss(&mut tape, df)?,
                LossMode::WganGp { .. } => wgan_gen_loss(&mut tape, df)?,
            };
            let g_loss_v = tape.value(g_loss).scalar_value().map_err(GanError::Tensor)?;
            if !g_loss_v.is_finite() {
                return Err(GanError::Training {
                    epoch,
                    iteration,
                    reason: format!("generator loss became {g_loss_v}"),
                });
            }
            let grads = tape.backward(g_loss).map_err(GanError::Tensor)?;
            let named = gbound.named_grads(&grads);
            st.opt_g.step(&mut st.gen.params, &named)?;
            st.g_steps += 1;
            sum_g_loss += g_loss_v;
        }

        let stats = EpochStats {
            epoch,
            d_loss: sum_d_loss / d_batches as f64,
            g_loss: sum_g_loss / batches_per_epoch as f64,
            d_real_mean: sum_dr / d_batches as f64,
            d_fake_mean: sum_df / d_batches as f64,
            seconds: started.elapsed().as_secs_f64(),
        };
        history.epochs.push(stats);
        st.epoch_done = epoch;
        st.rng_shuffle = stream.rng.clone();

        if let Some(out) = outputs {
            if epoch % cfg.grid_interval.max(1) == 0 || epoch == until_epoch {
                let grid = st.gen.forward_value(&grid_noise, BnMode::Eval, SnSetting::Off)?;
                write_sample_grid(&out.dir.join(format!("samples_ep{epoch:04}.pgm")), &grid, 4)?;
            }
            if epoch == 1 || epoch % cfg.checkpoint_interval.max(1) == 0 || epoch == until_epoch {
                let path = out.dir.join(format!("checkpoint_ep{epoch:04}.gfc"));
                save_gan_checkpoint(&path, &st)?;
                checkpoints.push(path);
            }
        }
    }

    Ok(TrainResult {
        generator: st.gen,
        discriminator: st.disc,
        history,
        d_steps: st.d_steps,
        g_steps: st.g_steps,
        checkpoints,
    })
}

/// Save the current state of a training run without running any epochs
/// (used to snapshot a freshly initialized pair).
pub fn snapshot_fresh(cfg: &TrainConfig, channels: usize, path: &Path) -> Result<()> {
    cfg.validate()?;
    let st = TrainState::fresh(cfg, channels)?;
    save_gan_checkpoint(path, &st)
}
