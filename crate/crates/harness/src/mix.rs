//! Class-balanced mixing of synthetic samples into a real training set.

use ganforge_core::{derive_seed, Rng};
use ganforge_data::Dataset;

use crate::error::{HarnessError, Result};

/// Append `floor(ratio * N_real)` synthetic samples drawn class-balanced
/// (equal quotas, largest remainder toward lower class ids) without
/// replacement from the pool. Ratio zero returns the real set unchanged.
pub fn mix_synthetic(real: &Dataset, synth: &Dataset, ratio: f64, seed: u64) -> Result<Dataset> {
    if ratio < 0.0 {
        return Err(HarnessError::Invalid(format!("ratio must be >= 0, got {ratio}")));
    }
    if real.class_names != synth.class_names {
        return Err(HarnessError::Invalid(format!(
            "label spaces differ: {:?} vs {:?}",
            real.class_names, synth.class_names
        )));
    }
    let total = (ratio * real.len() as f64).floor() as usize;
    if total == 0 {
        return Ok(real.clone());
    }
    let n_classes = real.n_classes();
    let base = total / n_classes;
    let remainder = total % n_classes;
    let pool = synth.class_indices();
    let mut chosen = Vec::with_capacity(total);
    for class in 0..n_classes {
        let quota = base + usize::from(class < remainder);
        if quota == 0 {
            continue;
        }
        let available = pool[class].len();
        if available < quota {
            return Err(HarnessError::SyntheticShortfall { class, needed: quota, available });
        }
        let mut rng = Rng::new(derive_seed(seed, &format!("mix/class/{class}")));
        let picks = rng.sample_indices(available, quota);
        chosen.extend(picks.into_iter().map(|p| pool[class][p]));
    }
    chosen.sort_unstable();
    let extra = synth.subset(&chosen, synth.split_tag)?;
    Ok(real.concat(&extra)?)
}
