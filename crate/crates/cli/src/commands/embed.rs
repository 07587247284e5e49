//! `ganforge embed`: PCA and/or t-SNE layouts of real (and optionally
//! generated) features, exported as CSV + SVG scatter pairs.

use std::path::PathBuf;

use ganforge_core::{derive_seed, Tensor};
use ganforge_data::cache;
use ganforge_embed::export::export_scatter;
use ganforge_embed::{pca, tsne, EmbeddingLayout, PointSource, TsneConfig};
use ganforge_gan::checkpoint::load_gan_checkpoint;
use ganforge_gan::generate;
use ganforge_metrics::{extract_features, Source};
use serde::Serialize;

use crate::config::{resolve_seed, write_resolved, FileConfig};
use crate::errors::{CliError, Result};
use crate::extractors::parse_extractor;
use crate::CommonArgs;

#[derive(clap::Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: PathBuf,
    /// Optional GAN checkpoint; adds generated samples to the plot.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// `pca`, `tsne`, or `both`.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub extractor: Option<String>,
    #[arg(long)]
    pub n_synth: Option<usize>,
    #[arg(long)]
    pub perp: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Disable early exaggeration.
    #[arg(long)]
    pub no_exaggeration: bool,
}

#[derive(Serialize)]
struct Resolved {
    command: &'static str,
    seed: u64,
    method: String,
    extractor: String,
    n_synth: usize,
    perplexity: f64,
    iters: usize,
    eta: f64,
    exaggeration: bool,
}

pub fn run(args: EmbedArgs) -> Result<()> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve_seed(args.common.seed, file.seed)?;
    let sec = &file.embed;
    let method = args.method.or_else(|| sec.method.clone()).unwrap_or_else(|| "both".into());
    if !["pca", "tsne", "both"].contains(&method.as_str()) {
        return Err(CliError::validation(format!("unknown method {method:?}")));
    }
    let extractor_spec = args
        .extractor
        .or_else(|| sec.extractor.clone())
        .unwrap_or_else(|| "classifier".into());
    let n_synth = args.n_synth.or(sec.n_synth).unwrap_or(128);
    let perplexity = args.perp.or(sec.perplexity).unwrap_or(30.0);
    let iters = args.iters.or(sec.iters).unwrap_or(1000);
    let eta = args.eta.or(sec.eta).unwrap_or(200.0);
    let exaggeration = !args.no_exaggeration && sec.exaggeration.unwrap_or(true);

    let resolved = Resolved {
        command: "embed",
        seed,
        method: method.clone(),
        extractor: extractor_spec.clone(),
        n_synth,
        perplexity,
        iters,
        eta,
        exaggeration,
    };
    write_resolved(&args.common.out, &resolved)?;

    let choice = parse_extractor(&extractor_spec)?;
    let extractor = choice.as_extractor(seed);
    let data = cache::load_dataset(&args.data)?;
    let real_features = extract_features(&data.images, extractor.as_ref(), Source::Real)?;

    let mut features = real_features.features.data().to_vec();
    let dim = real_features.dim();
    let mut labels = data.labels.clone();
    let mut sources = vec![PointSource::Real; data.len()];

    if let Some(ckpt_path) = &args.checkpoint {
        let mut ckpt = load_gan_checkpoint(ckpt_path)?;
        let samples = generate(&mut ckpt.generator, n_synth, derive_seed(seed, "embed-synth"))?;
        let synth_features = extract_features(&samples, extractor.as_ref(), Source::Synthetic)?;
        features.extend_from_slice(synth_features.features.data());
        // Unconditional generator: synthetic points carry no class label.
        labels.extend(std::iter::repeat_n(0usize, n_synth));
        sources.extend(std::iter::repeat_n(PointSource::Synthetic, n_synth));
    }
    let n = labels.len();
    let x = Tensor::new(vec![n, dim], features).map_err(CliError::from)?;

    let make_layout = |coords: &Tensor, kl: Option<f64>| -> Result<EmbeddingLayout> {
        let points: Vec<[f64; 2]> = coords
            .data()
            .chunks_exact(2)
            .map(|c| [c[0], c[1]])
            .collect();
        Ok(EmbeddingLayout::new(points, labels.clone(), sources.clone(), kl)?)
    };

    if method == "pca" || method == "both" {
        let p = pca(&x, 2).map_err(CliError::from)?;
        let layout = make_layout(&p.projection, None)?;
        let (csv, svg) = export_scatter(&layout, &args.common.out.join("pca_layout"))?;
        println!(
            "pca: wrote {} and {} (explained variance {:.3}, {:.3})",
            csv.display(),
            svg.display(),
            p.explained_variance_ratios[0],
            p.explained_variance_ratios.get(1).copied().unwrap_or(0.0)
        );
    }
    if method == "tsne" || method == "both" {
        if n < 4 {
            return Err(CliError::missing(format!("t-SNE needs at least 4 points, dataset has {n}")));
        }
        let cfg = TsneConfig {
            perplexity,
            iters,
            eta,
            exaggeration: if exaggeration { Some((12.0, 250)) } else { None },
            seed: derive_seed(seed, "tsne"),
            ..TsneConfig::default()
        };
        let t = tsne(&x, &cfg).map_err(CliError::from)?;
        let layout = make_layout(&t.y, Some(t.final_kl))?;
        let (csv, svg) = export_scatter(&layout, &args.common.out.join("tsne_layout"))?;
        println!("tsne: wrote {} and {} (KL {:.6})", csv.display(), svg.display(), t.final_kl);
    }
    Ok(())
}
