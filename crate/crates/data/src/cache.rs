//! On-disk dataset cache: a JSON manifest plus GFT1 tensor files.

use std::fs;
use std::path::Path;

use ganforge_core::{gft, Tensor};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SampleSource, SplitTag};
use crate::error::{DataError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGES_FILE: &str = "images.gft";
pub const LABELS_FILE: &str = "labels.gft";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub n: usize,
    pub channels: usize,
    pub class_names: Vec<String>,
    pub split_tag: SplitTag,
    pub provenance: String,
    pub preprocessing: Preprocessing,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Preprocessing {
    pub resize: String,
    pub cubic_a: f64,
    pub value_range: (f64, f64),
}

impl Preprocessing {
    pub fn standard() -> Self {
        Preprocessing {
            resize: format!("bicubic->{0}x{0}", crate::IMAGE_SIDE),
            cubic_a: -0.5,
            value_range: (-1.0, 1.0),
        }
    }
}

pub fn parse_manifest(bytes: &[u8]) -> Result<Manifest> {
    let m: Manifest =
        serde_json::from_slice(bytes).map_err(|e| DataError::Cache(format!("manifest: {e}")))?;
    if m.format != "ganforge-dataset-v1" {
        return Err(DataError::Cache(format!("unknown cache format {:?}", m.format)));
    }
    Ok(m)
}

pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        format: "ganforge-dataset-v1".into(),
        n: data.len(),
        channels: data.channels(),
        class_names: data.class_names.clone(),
        split_tag: data.split_tag,
        provenance: data.provenance.clone(),
        preprocessing: Preprocessing::standard(),
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(dir.join(MANIFEST_FILE), json)?;
    gft::write_tensor_file(&dir.join(IMAGES_FILE), &data.images)?;
    let labels = Tensor::from_vec(data.labels.iter().map(|&l| l as f64).collect());
    gft::write_tensor_file(&dir.join(LABELS_FILE), &labels)?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = parse_manifest(&fs::read(dir.join(MANIFEST_FILE))?)?;
    let images = gft::read_tensor_file(&dir.join(IMAGES_FILE))?;
    let labels_t = gft::read_tensor_file(&dir.join(LABELS_FILE))?;
    let labels: Vec<usize> = labels_t
        .data()
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v >= 0.0 && v < manifest.class_names.len() as f64 {
                Ok(v as usize)
            } else {
                Err(DataError::Cache(format!("label {v} is not a valid class id")))
            }
        })
        .collect::<Result<_>>()?;
    if images.shape().first() != Some(&manifest.n) || labels.len() != manifest.n {
        return Err(DataError::Cache(format!(
            "manifest claims {} samples, tensors hold {:?}/{}",
            manifest.n,
            images.shape().first(),
            labels.len()
        )));
    }
    Dataset::with_sources(
        images,
        labels,
        vec![SampleSource::Real; manifest.n],
        manifest.class_names,
        manifest.split_tag,
        manifest.provenance,
    )
}
