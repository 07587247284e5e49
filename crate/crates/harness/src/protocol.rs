//! The three-regimen comparison: real-only, classically augmented, and
//! GAN-augmented classifiers over a seed grid, with mean and dispersion
//! reporting.

use ganforge_core::derive_seed;
use ganforge_data::split::DatasetSplits;
use ganforge_data::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::eval::evaluate_classifier;
use crate::mix::mix_synthetic;
use crate::policies::AugPolicy;
use crate::train_cls::{train_classifier, ClassifierConfig, TrainedClassifier};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regimen {
    Real,
    Classical,
    Gan { ratio: f64, filtered: bool },
}

impl Regimen {
    pub fn label(&self) -> String {
        match self {
            Regimen::Real => "real".into(),
            Regimen::Classical => "classical".into(),
            Regimen::Gan { ratio, filtered } => {
                format!("gan(ratio={ratio},{})", if *filtered { "filtered" } else { "unfiltered" })
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegimenResult {
    pub regimen: String,
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub auroc: Option<f64>,
    pub sens_at_spec: Option<f64>,
    pub n_train_real: usize,
    pub n_train_synth: usize,
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub seeds: Vec<u64>,
    pub classifier: ClassifierConfig,
    pub classical_policy_seed: u64,
    pub positive_class: Option<usize>,
    pub specificity_target: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            seeds: vec![0, 1, 2, 3, 4],
            classifier: ClassifierConfig::default(),
            classical_policy_seed: 0,
            positive_class: None,
            specificity_target: 0.9,
        }
    }
}

/// Synthetic pools available to the GAN regimens.
pub struct SynthPools<'a> {
    pub full: &'a Dataset,
    pub filtered: &'a Dataset,
}

fn run_cell(
    splits: &DatasetSplits,
    pools: Option<&SynthPools>,
    regimen: &Regimen,
    seed: u64,
    cfg: &ProtocolConfig,
) -> Result<RegimenResult> {
    let (train_set, policy, n_synth): (Dataset, AugPolicy, usize) = match regimen {
        Regimen::Real => (splits.train.clone(), AugPolicy::none(seed), 0),
        Regimen::Classical => (
            splits.train.clone(),
            AugPolicy::classical(derive_seed(cfg.classical_policy_seed, &format!("classical/{seed}"))),
            0,
        ),
        Regimen::Gan { ratio, filtered } => {
            let pools = pools.ok_or_else(|| {
                HarnessError::Invalid("GAN regimen requested without a synthetic pool".into())
            })?;
            let pool = if *filtered { pools.filtered } else { pools.full };
            let mixed = mix_synthetic(&splits.train, pool, *ratio, derive_seed(seed, "protocol-mix"))?;
            let n_synth = mixed.len() - splits.train.len();
            (mixed, AugPolicy::none(seed), n_synth)
        }
    };
    let cls_cfg = ClassifierConfig { seed: derive_seed(seed, "protocol-classifier"), ..cfg.classifier.clone() };
    let TrainedClassifier { mut classifier, .. } =
        train_classifier(&train_set, splits.val.as_ref(), &policy, &cls_cfg)?;
    let test = splits
        .test
        .as_ref()
        .ok_or_else(|| HarnessError::Invalid("protocol requires a test split".into()))?;
    let m = evaluate_classifier(&mut classifier, test, cfg.positive_class, cfg.specificity_target)?;
    Ok(RegimenResult {
        regimen: regimen.label(),
        seed,
        accuracy: m.accuracy,
        macro_f1: m.macro_f1,
        auroc: m.auroc,
        sens_at_spec: m.sens_at_spec,
        n_train_real: splits.train.len(),
        n_train_synth: n_synth,
    })
}

/// Run every `seed x regimen` cell. Cells execute in parallel worker
/// threads but results are assembled in deterministic cell order.
pub fn run_protocol(
    splits: &DatasetSplits,
    pools: Option<&SynthPools>,
    regimens: &[Regimen],
    cfg: &ProtocolConfig,
) -> Result<Vec<RegimenResult>> {
    if regimens.is_empty() {
        return Err(HarnessError::Invalid("at least one regimen is required".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(HarnessError::Invalid("at least one seed is required".into()));
    }
    let cells: Vec<(usize, &Regimen, u64)> = regimens
        .iter()
        .flat_map(|r| cfg.seeds.iter().map(move |&s| (r, s)))
        .enumerate()
        .map(|(i, (r, s))| (i, r, s))
        .collect();
    let workers = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1);
    let mut results: Vec<Option<Result<RegimenResult>>> = Vec::new();
    results.resize_with(cells.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(cells.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let (idx, regimen, seed) = cells[i];
                let out = run_cell(splits, pools, regimen, seed, cfg);
                slots.lock().unwrap()[idx] = Some(out);
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect()
}

/// Seed-aggregated mean and population standard deviation per regimen.
pub fn summarize(results: &[RegimenResult]) -> Vec<(String, f64, f64, f64, f64)> {
    let mut order: Vec<String> = Vec::new();
    for r in results {
        if !order.contains(&r.regimen) {
            order.push(r.regimen.clone());
        }
    }
    order
        .into_iter()
        .map(|label| {
            let accs: Vec<f64> = results.iter().filter(|r| r.regimen == label).map(|r| r.accuracy).collect();
            let f1s: Vec<f64> = results.iter().filter(|r| r.regimen == label).map(|r| r.macro_f1).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let std = |v: &[f64], m: f64| (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt();
            let (ma, mf) = (mean(&accs), mean(&f1s));
            (label, ma, std(&accs, ma), mf, std(&f1s, mf))
        })
        .collect()
}

pub fn results_to_csv(results: &[RegimenResult]) -> String {
    let mut out = String::from("regimen,seed,accuracy,macro_f1,auroc,sens_at_spec,n_train_real,n_train_synth\n");
    for r in results {
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.regimen,
            r.seed,
            r.accuracy,
            r.macro_f1,
            fmt_opt(r.auroc),
            fmt_opt(r.sens_at_spec),
            r.n_train_real,
            r.n_train_synth
        ));
    }
    out
}

pub fn results_to_markdown(results: &[RegimenResult]) -> String {
    let mut out = String::from("| regimen | accuracy | macro_f1 | auroc | sens_at_spec |\n|---|---|---|---|---|\n");
    for (label, acc, acc_sd, f1, f1_sd) in summarize(results) {
        let aurocs: Vec<f64> = results
            .iter()
            .filter(|r| r.regimen == label)
            .filter_map(|r| r.auroc)
            .collect();
        let sens: Vec<f64> = results
            .iter()
            .filter(|r| r.regimen == label)
            .filter_map(|r| r.sens_at_spec)
            .collect();
        let opt_mean = |v: &[f64]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                format!("{:.4}", v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        out.push_str(&format!(
            "| {label} | {acc:.4} ± {acc_sd:.4} | {f1:.4} ± {f1_sd:.4} | {} | {} |\n",
            opt_mean(&aurocs),
            opt_mean(&sens)
        ));
    }
    out
}
