//! `ganforge dataset`: build a preprocessed cache (manifest + GFT1).

use std::path::PathBuf;

use ganforge_data::{cache, loader, toy};
use serde::Serialize;

use crate::config::{resolve_seed, write_resolved, FileConfig};
use crate::errors::{CliError, Result};
use crate::CommonArgs;

#[derive(clap::Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Toy generator name: `glyphs` or `lungfields`.
    #[arg(long, conflicts_with = "from")]
    pub toy: Option<String>,
    /// Image tree `root/class_name/file.{pgm,ppm,png}`.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Glyph class count (toy glyphs only).
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Channel count for loaded trees (1 or 3).
    #[arg(long)]
    pub channels: Option<usize>,
}

#[derive(Serialize)]
struct Resolved {
    command: &'static str,
    seed: u64,
    source: String,
    classes: usize,
    per_class: usize,
    noise: f64,
    channels: usize,
}

pub fn run(args: DatasetArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve_seed(args.common.seed, file.seed)?;
    let sec = &file.dataset;
    let toy_kind = args.toy.or_else(|| sec.toy.clone());
    let classes = args.classes.or(sec.classes).unwrap_or(3);
    let per_class = args.per_class.or(sec.per_class).unwrap_or(64);
    let noise = args.noise.or(sec.noise).unwrap_or(0.6);
    let channels = args.channels.or(sec.channels).unwrap_or(3);

    let (source, data) = match (&toy_kind, &args.from) {
        (Some(kind), None) => {
            let ds = match kind.as_str() {
                "glyphs" => toy::synth_glyphs(classes, per_class, noise, seed)?,
                "lungfields" => toy::synth_lungfields(per_class, noise, seed)?,
                other => {
                    return Err(CliError::validation(format!(
                        "unknown toy dataset {other:?}; expected glyphs or lungfields"
                    )))
                }
            };
            (format!("toy:{kind}"), ds)
        }
        (None, Some(root)) => {
            if channels != 1 && channels != 3 {
                return Err(CliError::validation(format!("channels must be 1 or 3, got {channels}")));
            }
            (format!("dir:{}", root.display()), loader::load_image_dir(root, channels)?)
        }
        (None, None) => {
            return Err(CliError::validation("one of --toy or --from is required"));
        }
        (Some(_), Some(_)) => {
            return Err(CliError::validation("--toy and --from are mutually exclusive"));
        }
    };

    let resolved = Resolved {
        command: "dataset",
        seed,
        source,
        classes: data.n_classes(),
        per_class,
        noise,
        channels: data.channels(),
    };
    write_resolved(&args.common.out, &resolved)?;
    cache::save_dataset(&args.common.out, &data)?;
    println!(
        "dataset: {} samples, {} classes, {} channels, values in [{:.3}, {:.3}]",
        data.len(),
        data.n_classes(),
        data.channels(),
        data.images.min(),
        data.images.max()
    );
    Ok(())
}
