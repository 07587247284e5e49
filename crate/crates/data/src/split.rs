//! Deterministic train/val/test splits with optional stratification.

use ganforge_core::{derive_seed, Rng};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SplitTag};
use crate::error::{DataError, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fractions: (f64, f64, f64),
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.fractions;
        if a < 0.0 || b < 0.0 || c < 0.0 {
            return Err(DataError::Invalid(format!("negative split fraction in {:?}", self.fractions)));
        }
        if ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(DataError::Invalid(format!(
                "split fractions must sum to 1, got {}",
                a + b + c
            )));
        }
        Ok(())
    }
}

/// Result of a split; a side is `None` exactly when it received no samples.
#[derive(Clone, Debug)]
pub struct DatasetSplits {
    pub train: Dataset,
    pub val: Option<Dataset>,
    pub test: Option<Dataset>,
}

/// Apportion `n` items to the three fractions by largest remainder.
fn apportion(n: usize, fractions: (f64, f64, f64)) -> [usize; 3] {
    let fr = [fractions.0, fractions.1, fractions.2];
    let exact: Vec<f64> = fr.iter().map(|f| f * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    // Largest fractional part first; ties broken by split index.
    order.sort_by(|&i, &j| {
        let ri = exact[i] - exact[i].floor();
        let rj = exact[j] - exact[j].floor();
        rj.partial_cmp(&ri).unwrap().then(i.cmp(&j))
    });
    for k in 0..(n - assigned) {
        counts[order[k % 3]] += 1;
    }
    [counts[0], counts[1], counts[2]]
}

/// Split a dataset into disjoint, exhaustive train/val/test subsets.
///
/// Stratified mode shuffles and apportions each class separately, keeping
/// per-class proportions within one sample of the requested fractions.
pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<DatasetSplits> {
    spec.validate()?;
    let (a, b, c) = spec.fractions;
    if a > 0.0 && b > 0.0 && c > 0.0 && data.len() < 3 {
        return Err(DataError::Invalid(format!(
            "{} samples cannot feed three positive splits",
            data.len()
        )));
    }
    let mut buckets: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    if spec.stratified {
        for (class, mut idx) in data.class_indices().into_iter().enumerate() {
            let mut rng = Rng::new(derive_seed(spec.seed, &format!("split/class/{class}")));
            rng.shuffle(&mut idx);
            let counts = apportion(idx.len(), spec.fractions);
            let mut cursor = 0;
            for (bucket, &cnt) in buckets.iter_mut().zip(&counts) {
                bucket.extend_from_slice(&idx[cursor..cursor + cnt]);
                cursor += cnt;
            }
        }
        for b in buckets.iter_mut() {
            b.sort_unstable();
        }
    } else {
        let mut idx: Vec<usize> = (0..data.len()).collect();
        let mut rng = Rng::new(derive_seed(spec.seed, "split/global"));
        rng.shuffle(&mut idx);
        let counts = apportion(idx.len(), spec.fractions);
        let mut cursor = 0;
        for (bucket, &cnt) in buckets.iter_mut().zip(&counts) {
            let mut part = idx[cursor..cursor + cnt].to_vec();
            part.sort_unstable();
            *bucket = part;
            cursor += cnt;
        }
    }
    let [tr, va, te] = buckets;
    if tr.is_empty() {
        return Err(DataError::Invalid("train split received no samples".into()));
    }
    Ok(DatasetSplits {
        train: data.subset(&tr, SplitTag::Train)?,
        val: if va.is_empty() { None } else { Some(data.subset(&va, SplitTag::Val)?) },
        test: if te.is_empty() { None } else { Some(data.subset(&te, SplitTag::Test)?) },
    })
}
