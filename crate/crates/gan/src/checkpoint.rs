//! The `.gfc` checkpoint container: a JSON header followed by named GFT1
//! tensor blocks.
//!
//! Layout: magic `"GFC1"`, `u32` header length, header JSON, `u32` tensor
//! count, then per tensor a `u16` name length, the name bytes, and one
//! GFT1 record. Everything little-endian; tensor names sorted, so a saved
//! state is byte-for-byte reproducible.

use std::collections::BTreeMap;
use std::path::Path;

use ganforge_core::{gft, Rng, Tensor};
use serde::{Deserialize, Serialize};

use crate::adam::{AdamState, Optimizer};
use crate::builders::{build_discriminator, build_generator};
use crate::error::{GanError, Result};
use crate::network::Network;
use crate::train::{TrainConfig, TrainState};

pub const MAGIC: &[u8; 4] = b"GFC1";
const MAX_HEADER: usize = 1 << 20;
const MAX_TENSORS: usize = 4096;

/// Serialize a header plus named tensors into the container layout.
pub fn encode_container(header: &[u8], tensors: &BTreeMap<String, Tensor>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&gft::encode_tensor(t));
    }
    out
}

/// Parse a container, validating sizes before allocation.
pub fn decode_container(bytes: &[u8]) -> Result<(Vec<u8>, BTreeMap<String, Tensor>)> {
    let need = |pos: usize, n: usize| -> Result<()> {
        if pos.checked_add(n).map(|e| e > bytes.len()).unwrap_or(true) {
            return Err(GanError::Checkpoint("truncated container".into()));
        }
        Ok(())
    };
    need(0, 4)?;
    if &bytes[..4] != MAGIC {
        return Err(GanError::Checkpoint("missing GFC1 magic".into()));
    }
    let mut pos = 4;
    need(pos, 4)?;
    let hlen = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
    pos += 4;
    if hlen > MAX_HEADER {
        return Err(GanError::Checkpoint(format!("header of {hlen} bytes exceeds limit")));
    }
    need(pos, hlen)?;
    let header = bytes[pos..pos + hlen].to_vec();
    pos += hlen;
    need(pos, 4)?;
    let count = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
    pos += 4;
    if count > MAX_TENSORS {
        return Err(GanError::Checkpoint(format!("{count} tensors exceeds limit")));
    }
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        need(pos, 2)?;
        let nlen = u16::from_le_bytes(bytes[pos..pos + 2].try_into().unwrap()) as usize;
        pos += 2;
        need(pos, nlen)?;
        let name = std::str::from_utf8(&bytes[pos..pos + nlen])
            .map_err(|_| GanError::Checkpoint("tensor name is not utf-8".into()))?
            .to_string();
        pos += nlen;
        let (t, used) = gft::read_tensor_block(&bytes[pos..]).map_err(GanError::Tensor)?;
        pos += used;
        if tensors.insert(name.clone(), t).is_some() {
            return Err(GanError::Checkpoint(format!("duplicate tensor {name}")));
        }
    }
    if pos != bytes.len() {
        return Err(GanError::Checkpoint(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok((header, tensors))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GanHeader {
    pub format: String,
    pub config: TrainConfig,
    pub epoch: usize,
    pub data_channels: usize,
    pub rng_noise: [u64; 4],
    pub rng_shuffle: [u64; 4],
    pub rng_gp: [u64; 4],
    pub opt_g_t: u64,
    pub opt_d_t: u64,
    pub d_steps: u64,
    pub g_steps: u64,
    pub gen_init_seed: u64,
    pub disc_init_seed: u64,
}

pub const GAN_FORMAT: &str = "ganforge-gan-checkpoint-v1";

/// A parsed GAN checkpoint.
pub struct GanCheckpoint {
    pub header: GanHeader,
    pub generator: Network,
    pub discriminator: Network,
    tensors: BTreeMap<String, Tensor>,
}

fn collect_prefixed(tensors: &BTreeMap<String, Tensor>, prefix: &str) -> BTreeMap<String, Tensor> {
    tensors
        .iter()
        .filter_map(|(k, v)| k.strip_prefix(prefix).map(|rest| (rest.to_string(), v.clone())))
        .collect()
}

fn fill_network(net: &mut Network, tensors: &BTreeMap<String, Tensor>, prefix: &str) -> Result<()> {
    let params = collect_prefixed(tensors, &format!("{prefix}.p."));
    let buffers = collect_prefixed(tensors, &format!("{prefix}.buf."));
    for (name, expected) in &net.params {
        let got = params
            .get(name)
            .ok_or_else(|| GanError::Checkpoint(format!("missing tensor {prefix}.p.{name}")))?;
        if got.shape() != expected.shape() {
            return Err(GanError::Checkpoint(format!(
                "tensor {prefix}.p.{name} has shape {:?}, expected {:?}",
                got.shape(),
                expected.shape()
            )));
        }
    }
    net.params = params;
    net.buffers = buffers;
    Ok(())
}

fn optimizer_from(tensors: &BTreeMap<String, Tensor>, prefix: &str, hp: crate::adam::AdamParams, t: u64) -> Optimizer {
    let mut opt = Optimizer::new(hp);
    let ms = collect_prefixed(tensors, &format!("{prefix}.m."));
    let vs = collect_prefixed(tensors, &format!("{prefix}.v."));
    for (name, m) in ms {
        if let Some(v) = vs.get(&name) {
            opt.states.insert(name, AdamState { m, v: v.clone(), t });
        }
    }
    opt
}

pub(crate) fn save_gan_checkpoint(path: &Path, st: &TrainState) -> Result<()> {
    let header = GanHeader {
        format: GAN_FORMAT.into(),
        config: st.cfg.clone(),
        epoch: st.epoch_done,
        data_channels: st.data_channels,
        rng_noise: st.rng_noise.state(),
        rng_shuffle: st.rng_shuffle.state(),
        rng_gp: st.rng_gp.state(),
        opt_g_t: st.opt_g.steps(),
        opt_d_t: st.opt_d.steps(),
        d_steps: st.d_steps,
        g_steps: st.g_steps,
        gen_init_seed: st.gen.init_seed,
        disc_init_seed: st.disc.init_seed,
    };
    let mut tensors = BTreeMap::new();
    for (k, v) in &st.gen.params {
        tensors.insert(format!("gen.p.{k}"), v.clone());
    }
    for (k, v) in &st.gen.buffers {
        tensors.insert(format!("gen.buf.{k}"), v.clone());
    }
    for (k, v) in &st.disc.params {
        tensors.insert(format!("disc.p.{k}"), v.clone());
    }
    for (k, v) in &st.disc.buffers {
        tensors.insert(format!("disc.buf.{k}"), v.clone());
    }
    for (k, s) in &st.opt_g.states {
        tensors.insert(format!("opt_g.m.{k}"), s.m.clone());
        tensors.insert(format!("opt_g.v.{k}"), s.v.clone());
    }
    for (k, s) in &st.opt_d.states {
        tensors.insert(format!("opt_d.m.{k}"), s.m.clone());
        tensors.insert(format!("opt_d.v.{k}"), s.v.clone());
    }
    let header_json = serde_json::to_vec(&header).expect("header serializes");
    std::fs::write(path, encode_container(&header_json, &tensors))?;
    Ok(())
}

pub fn load_gan_checkpoint(path: &Path) -> Result<GanCheckpoint> {
    let bytes = std::fs::read(path)?;
    parse_gan_checkpoint(&bytes)
}

pub fn parse_gan_checkpoint(bytes: &[u8]) -> Result<GanCheckpoint> {
    let (header_bytes, tensors) = decode_container(bytes)?;
    let header: GanHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| GanError::Checkpoint(format!("header: {e}")))?;
    if header.format != GAN_FORMAT {
        return Err(GanError::Checkpoint(format!("unknown format {:?}", header.format)));
    }
    header.config.validate()?;
    if header.data_channels != 1 && header.data_channels != 3 {
        return Err(GanError::Checkpoint(format!(
            "data_channels must be 1 or 3, got {}",
            header.data_channels
        )));
    }
    let cfg = &header.config;
    let mut generator = build_generator(cfg.latent_dim, header.data_channels, cfg.width)?;
    generator.init_seed = header.gen_init_seed;
    fill_network(&mut generator, &tensors, "gen")?;
    let mut discriminator = build_discriminator(header.data_channels, cfg.width, cfg.loss.is_critic())?;
    discriminator.init_seed = header.disc_init_seed;
    fill_network(&mut discriminator, &tensors, "disc")?;
    Ok(GanCheckpoint { header, generator, discriminator, tensors })
}

impl GanCheckpoint {
    pub(crate) fn into_state(self) -> Result<TrainState> {
        let cfg = self.header.config.clone();
        let opt_g = optimizer_from(&self.tensors, "opt_g", cfg.adam, self.header.opt_g_t);
        let opt_d = optimizer_from(&self.tensors, "opt_d", cfg.adam, self.header.opt_d_t);
        Ok(TrainState {
            cfg,
            gen: self.generator,
            disc: self.discriminator,
            opt_g,
            opt_d,
            epoch_done: self.header.epoch,
            rng_noise: Rng::from_state(self.header.rng_noise),
            rng_shuffle: Rng::from_state(self.header.rng_shuffle),
            rng_gp: Rng::from_state(self.header.rng_gp),
            d_steps: self.header.d_steps,
            g_steps: self.header.g_steps,
            data_channels: self.header.data_channels,
        })
    }
}
