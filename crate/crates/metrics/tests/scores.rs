//! Metric oracles: hand-computed KL, closed-form Gaussian Fréchet
//! distances, brute-force MMD sums, exhaustive manifold membership.

use ganforge_core::{Rng, Tensor};
use ganforge_metrics::features::{extract_features, FeatureSet, RandomProjection, RawPixels, Source};
use ganforge_metrics::{fid, inception_score, kid, precision_recall, quality_gate, GateOutcome, GateThresholds, MetricReport};
use proptest::prelude::*;

fn feats(rows: &[&[f64]]) -> FeatureSet {
    let d = rows[0].len();
    let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    FeatureSet::new(Tensor::new(vec![rows.len(), d], data).unwrap(), "test", Source::Real).unwrap()
}

fn gaussian_feats(rng: &mut Rng, n: usize, d: usize, mean: f64, std: f64) -> FeatureSet {
    FeatureSet::new(
        Tensor::new(vec![n, d], rng.normal_vec(n * d, mean, std)).unwrap(),
        "gauss",
        Source::Real,
    )
    .unwrap()
}

// ---------------------------------------------------------------- features

#[test]
fn raw_pixels_flatten() {
    let mut rng = Rng::new(1);
    let imgs = Tensor::new(vec![4, 3, 64, 64], rng.normal_vec(4 * 3 * 64 * 64, 0.0, 0.3))
        .unwrap()
        .map(f64::tanh);
    let fs = extract_features(&imgs, &RawPixels, Source::Real).unwrap();
    assert_eq!(fs.features.shape(), &[4, 12288]);
}

#[test]
fn random_projection_is_seed_deterministic() {
    let mut rng = Rng::new(2);
    let imgs = Tensor::new(vec![3, 1, 64, 64], rng.normal_vec(3 * 64 * 64, 0.0, 0.3))
        .unwrap()
        .map(f64::tanh);
    let a = extract_features(&imgs, &RandomProjection { dim: 64, seed: 5 }, Source::Real).unwrap();
    let b = extract_features(&imgs, &RandomProjection { dim: 64, seed: 5 }, Source::Real).unwrap();
    assert_eq!(a.features, b.features);
    assert_eq!(a.features.shape(), &[3, 64]);
}

#[test]
fn extractors_reject_out_of_range_images() {
    let imgs = Tensor::full(&[1, 1, 64, 64], 2.0);
    assert!(extract_features(&imgs, &RawPixels, Source::Real).is_err());
}

// --------------------------------------------------------- inception score

#[test]
fn uniform_rows_score_exactly_one() {
    let probs = Tensor::new(vec![20, 4], vec![0.25; 80]).unwrap();
    let (mean, std) = inception_score(&probs, 10).unwrap();
    assert_eq!(mean, 1.0);
    assert_eq!(std, 0.0);
}

#[test]
fn balanced_one_hot_rows_score_class_count() {
    // 100 rows cycling through 10 classes: every contiguous split of 10 is
    // balanced, so each split's marginal is uniform.
    let c = 10;
    let mut data = vec![0.0; 100 * c];
    for i in 0..100 {
        data[i * c + (i % c)] = 1.0;
    }
    let probs = Tensor::new(vec![100, c], data).unwrap();
    let (mean, _) = inception_score(&probs, 10).unwrap();
    assert!((mean - 10.0).abs() < 1e-9, "{mean}");
}

#[test]
fn inception_score_matches_hand_kl() {
    let rows = [
        [0.9, 0.1],
        [0.8, 0.2],
        [0.3, 0.7],
        [0.2, 0.8],
    ];
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let probs = Tensor::new(vec![4, 2], flat).unwrap();
    let (mean, _) = inception_score(&probs, 1).unwrap();
    let marg = [0.55, 0.45];
    let mut acc = 0.0;
    for r in &rows {
        acc += r[0] * (r[0] / marg[0]).ln() + r[1] * (r[1] / marg[1]).ln();
    }
    let want = (acc / 4.0).exp();
    assert!((mean - want).abs() < 1e-12, "{mean} vs {want}");
}

#[test]
fn inception_score_rejects_bad_rows() {
    let neg = Tensor::new(vec![1, 2], vec![-0.1, 1.1]).unwrap();
    assert!(inception_score(&neg, 1).is_err());
    let bad_sum = Tensor::new(vec![1, 2], vec![0.6, 0.6]).unwrap();
    assert!(inception_score(&bad_sum, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn inception_score_bounded_by_class_count(seed in any::<u64>(), n in 4usize..40, c in 2usize..8) {
        let mut rng = Rng::new(seed);
        let mut data = Vec::with_capacity(n * c);
        for _ in 0..n {
            let mut row: Vec<f64> = (0..c).map(|_| rng.uniform() + 1e-9).collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= sum);
            data.extend(row);
        }
        let probs = Tensor::new(vec![n, c], data).unwrap();
        let splits = n.min(10);
        let (mean, _) = inception_score(&probs, splits).unwrap();
        prop_assert!(mean >= 1.0 - 1e-9);
        prop_assert!(mean <= c as f64 + 1e-9);
    }
}

// ----------------------------------------------------------------------- fid

#[test]
fn fid_identical_sets_is_zero() {
    let mut rng = Rng::new(3);
    let x = gaussian_feats(&mut rng, 40, 6, 0.0, 1.0);
    let d = fid(&x, &x).unwrap();
    assert!(d <= 1e-9, "{d}");
}

#[test]
fn fid_point_masses_measure_mean_distance() {
    // Two zero-covariance point masses at distance 1.
    let a = feats(&[&[0.0, 0.0], &[0.0, 0.0]]);
    let b = feats(&[&[1.0, 0.0], &[1.0, 0.0]]);
    let d = fid(&a, &b).unwrap();
    assert!((d - 1.0).abs() < 1e-9, "{d}");
}

/// Scale a centered point cloud so its sample covariance is exactly
/// `diag(target, ..., target)`.
fn engineered_cov(points: &[[f64; 2]], target: f64) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut mean = [0.0; 2];
    for p in points {
        mean[0] += p[0] / n as f64;
        mean[1] += p[1] / n as f64;
    }
    let mut var = [0.0; 2];
    for p in points {
        var[0] += (p[0] - mean[0]).powi(2) / (n as f64 - 1.0);
        var[1] += (p[1] - mean[1]).powi(2) / (n as f64 - 1.0);
    }
    points
        .iter()
        .map(|p| {
            [
                (p[0] - mean[0]) * (target / var[0]).sqrt(),
                (p[1] - mean[1]) * (target / var[1]).sqrt(),
            ]
        })
        .collect()
}

#[test]
fn fid_matches_closed_form_gaussian_distance() {
    // Sample covariances diag(1,1) vs diag(4,4) with equal means:
    // closed form (1 + 4 - 2*sqrt(1*4)) * 2 = 2. Axis-aligned points keep
    // the off-diagonals exactly zero by symmetry.
    let sym = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
    let pa = engineered_cov(&sym, 1.0);
    let pb = engineered_cov(&sym, 4.0);
    let fa = feats(&pa.iter().map(|p| p.as_slice()).collect::<Vec<_>>());
    let fb = feats(&pb.iter().map(|p| p.as_slice()).collect::<Vec<_>>());
    let d = fid(&fa, &fb).unwrap();
    assert!((d - 2.0).abs() < 1e-6, "{d}");
}

#[test]
fn fid_is_symmetric() {
    let mut rng = Rng::new(4);
    let a = gaussian_feats(&mut rng, 30, 5, 0.0, 1.0);
    let b = gaussian_feats(&mut rng, 25, 5, 0.5, 1.4);
    let ab = fid(&a, &b).unwrap();
    let ba = fid(&b, &a).unwrap();
    assert!((ab - ba).abs() < 1e-9, "{ab} vs {ba}");
}

#[test]
fn fid_grows_with_mean_shift() {
    let mut rng = Rng::new(5);
    let a = gaussian_feats(&mut rng, 60, 4, 0.0, 1.0);
    let mut prev = -1.0;
    for shift in [0.5, 1.0, 2.0, 4.0] {
        let shifted = FeatureSet::new(a.features.map(|v| v + shift), "gauss", Source::Synthetic).unwrap();
        let d = fid(&a, &shifted).unwrap();
        assert!(d > prev, "fid {d} did not grow past {prev} at shift {shift}");
        // Identical covariance: distance should track ||dmu||^2 = D * shift^2.
        let want = 4.0 * shift * shift;
        assert!((d - want).abs() < 0.3 * want, "{d} vs closed form {want}");
        prev = d;
    }
}

#[test]
fn fid_rejects_mismatched_dims_and_tiny_sets() {
    let a = feats(&[&[0.0, 0.0], &[1.0, 1.0]]);
    let b = feats(&[&[0.0], &[1.0]]);
    assert!(fid(&a, &b).is_err());
    let single = feats(&[&[0.0, 0.0]]);
    assert!(fid(&a, &single).is_err());
}

// ----------------------------------------------------------------------- kid

#[test]
fn poly3_kernel_identity_at_origin() {
    assert_eq!(ganforge_metrics::kid::poly3_kernel(&[0.0, 0.0], &[0.0, 0.0]), 1.0);
}

#[test]
fn kid_matches_brute_force_double_sum() {
    let a = feats(&[&[0.0], &[1.0], &[2.0]]);
    let b = feats(&[&[0.0], &[1.0], &[2.0]]);
    let (mean, _) = kid(&a, &b, 3, 1, 0).unwrap();
    // Brute-force unbiased MMD^2 with every point used once.
    let k = |x: f64, y: f64| (x * y + 1.0_f64).powi(3);
    let xs = [0.0, 1.0, 2.0];
    let mut kxx = 0.0;
    let mut kxy = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                kxx += k(xs[i], xs[j]);
            }
            kxy += k(xs[i], xs[j]);
        }
    }
    let want = kxx / 6.0 + kxx / 6.0 - 2.0 * kxy / 9.0;
    assert!((mean - want).abs() < 1e-12, "{mean} vs {want}");
}

#[test]
fn kid_null_distribution_is_centered() {
    let mut rng = Rng::new(6);
    let pool = gaussian_feats(&mut rng, 120, 4, 0.0, 1.0);
    let pool2 = gaussian_feats(&mut rng, 120, 4, 0.0, 1.0);
    let (mean, std) = kid(&pool, &pool2, 20, 100, 7).unwrap();
    assert!(mean.abs() <= 3.0 * std.max(1e-12), "KID {mean} vs 3 sigma {std}");
}

#[test]
fn kid_rejects_oversized_subsets() {
    let a = feats(&[&[0.0], &[1.0]]);
    assert!(kid(&a, &a, 3, 1, 0).is_err());
}

// ---------------------------------------------------------- precision/recall

#[test]
fn identical_sets_have_unit_precision_recall() {
    let mut rng = Rng::new(7);
    let x = gaussian_feats(&mut rng, 20, 3, 0.0, 1.0);
    let (p, r) = precision_recall(&x, &x, 1).unwrap();
    assert_eq!(p, 1.0);
    assert_eq!(r, 1.0);
}

#[test]
fn distant_sets_have_zero_precision_recall() {
    let mut rng = Rng::new(8);
    let a = gaussian_feats(&mut rng, 16, 3, 0.0, 1.0);
    let b = FeatureSet::new(a.features.map(|v| v + 1e6), "far", Source::Synthetic).unwrap();
    let (p, r) = precision_recall(&a, &b, 2).unwrap();
    assert_eq!(p, 0.0);
    assert_eq!(r, 0.0);
}

#[test]
fn precision_recall_matches_exhaustive_oracle_1d() {
    let real = feats(&[&[0.0], &[1.0], &[2.0], &[3.0]]);
    let fake = feats(&[&[0.1], &[50.0]]);
    let (p, r) = precision_recall(&real, &fake, 1).unwrap();
    // Real k=1 radii: |0-1|, |1-0| or |1-2| ... = 1 for each point.
    // Fake 0.1 is within real radius; 50 is not -> precision 0.5.
    assert_eq!(p, 0.5);
    // Fake radii: |0.1-50| = 49.9 each; every real point within 49.9 of 0.1.
    assert_eq!(r, 1.0);
}

/// Brute-force oracle with fully sorted distance lists and explicit ball
/// membership, evaluated in the test only.
fn pr_oracle(real: &FeatureSet, fake: &FeatureSet, k: usize) -> (f64, f64) {
    let radii = |set: &FeatureSet| -> Vec<f64> {
        (0..set.len())
            .map(|i| {
                let mut d: Vec<f64> = (0..set.len())
                    .filter(|&j| j != i)
                    .map(|j| {
                        set.row(i)
                            .iter()
                            .zip(set.row(j))
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                    })
                    .collect();
                d.sort_by(|a, b| a.partial_cmp(b).unwrap());
                d[k - 1]
            })
            .collect()
    };
    let rr = radii(real);
    let fr = radii(fake);
    let frac = |pts: &FeatureSet, mfd: &FeatureSet, rad: &[f64]| -> f64 {
        let mut hit = 0;
        for i in 0..pts.len() {
            let mut inside = false;
            for j in 0..mfd.len() {
                let d2: f64 = pts
                    .row(i)
                    .iter()
                    .zip(mfd.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d2 <= rad[j] {
                    inside = true;
                    break;
                }
            }
            if inside {
                hit += 1;
            }
        }
        hit as f64 / pts.len() as f64
    };
    (frac(fake, real, &rr), frac(real, fake, &fr))
}

#[test]
fn precision_recall_agrees_with_oracle_on_100_instances() {
    let mut rng = Rng::new(9);
    for case in 0..100 {
        let n_r = 4 + rng.below(61);
        let n_f = 4 + rng.below(61);
        let d = 1 + rng.below(4);
        let k = 1 + rng.below(3.min(n_r.min(n_f) - 1));
        let real = gaussian_feats(&mut rng, n_r, d, 0.0, 1.0);
        let fake = gaussian_feats(&mut rng, n_f, d, 0.5, 1.2);
        let (p, r) = precision_recall(&real, &fake, k).unwrap();
        let (po, ro) = pr_oracle(&real, &fake, k);
        assert_eq!(p, po, "case {case}: precision mismatch");
        assert_eq!(r, ro, "case {case}: recall mismatch");
    }
}

#[test]
fn duplicate_points_zero_radius_matches_exact_duplicates() {
    let real = feats(&[&[0.0], &[0.0], &[5.0]]);
    let fake = feats(&[&[0.0], &[0.1]]);
    let (p, _) = precision_recall(&real, &fake, 1).unwrap();
    // Radii: the duplicated zeros have radius 0; 5.0 has radius 5.
    // Fake 0.0 matches the zero-radius ball exactly; 0.1 is inside 5.0's
    // radius-5 ball, so precision is 1.
    assert_eq!(p, 1.0);
}

// ---------------------------------------------------------------------- gate

fn report_with(fid: f64, precision: f64) -> MetricReport {
    MetricReport {
        is_mean: 1.0,
        is_std: 0.0,
        fid,
        kid_mean: 0.0,
        kid_std: 0.0,
        precision,
        recall: 1.0,
        extractor_id: "test".into(),
        n_real: 10,
        n_fake: 10,
    }
}

#[test]
fn permissive_gate_passes_and_keeps_upper_half() {
    let scores = [0.3, 0.9, 0.1, 0.7];
    let out = quality_gate(&scores, &report_with(5.0, 0.2), &GateThresholds::default()).unwrap();
    match out {
        GateOutcome::Pass { retained } => assert_eq!(retained, vec![1, 3]),
        other => panic!("expected pass, got {other:?}"),
    }
}

#[test]
fn impossible_fid_threshold_fails() {
    let scores = [0.5, 0.6];
    let out = quality_gate(&scores, &report_with(0.5, 1.0), &GateThresholds { fid_max: 0.0, precision_min: 0.0 }).unwrap();
    assert!(matches!(out, GateOutcome::Fail { .. }));
}

#[test]
fn median_rule_retains_twos_from_hand_scores() {
    let scores = [0.1, 0.4, 0.6, 0.9];
    let out = quality_gate(&scores, &report_with(0.0, 1.0), &GateThresholds { fid_max: 1.0, precision_min: 0.5 }).unwrap();
    match out {
        GateOutcome::Pass { retained } => {
            assert_eq!(retained, vec![2, 3]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn odd_count_keeps_ceil_half() {
    let scores = [1.0, 2.0, 3.0, 4.0, 5.0];
    let out = quality_gate(&scores, &report_with(0.0, 1.0), &GateThresholds::default()).unwrap();
    match out {
        GateOutcome::Pass { retained } => assert_eq!(retained.len(), 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn report_round_trips_and_validates() {
    let r = report_with(0.2, 0.9);
    r.validate().unwrap();
    let json = r.to_json();
    let back: MetricReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.fid, r.fid);
    let csv = r.to_csv();
    assert!(csv.lines().count() == 2);
    assert!(csv.contains("is_mean"));

    let bad = MetricReport { is_mean: 0.5, ..report_with(0.1, 0.5) };
    assert!(bad.validate().is_err());
}

#[test]
fn fid_dual_route_agrees_with_feature_space_route() {
    // D > N triggers the sample-space route; embedding the same points in
    // extra zero dimensions must not change the distance.
    let mut rng = Rng::new(21);
    let n = 10;
    let d_small = 4;
    let a = gaussian_feats(&mut rng, n, d_small, 0.0, 1.0);
    let b = gaussian_feats(&mut rng, n, d_small, 0.7, 1.3);
    let d_small_fid = fid(&a, &b).unwrap();
    let embed = |src: &FeatureSet| -> FeatureSet {
        let big_d = 40;
        let mut data = vec![0.0; n * big_d];
        for i in 0..n {
            data[i * big_d..i * big_d + d_small].copy_from_slice(src.row(i));
        }
        FeatureSet::new(Tensor::new(vec![n, big_d], data).unwrap(), "embedded", Source::Real).unwrap()
    };
    let d_big_fid = fid(&embed(&a), &embed(&b)).unwrap();
    assert!(
        (d_small_fid - d_big_fid).abs() < 1e-8 * d_small_fid.max(1.0),
        "{d_small_fid} vs {d_big_fid}"
    );
}

#[test]
fn fid_high_dimensional_self_distance_is_zero() {
    let mut rng = Rng::new(22);
    let x = gaussian_feats(&mut rng, 8, 200, 0.0, 1.0);
    assert!(fid(&x, &x).unwrap() <= 1e-9);
}
