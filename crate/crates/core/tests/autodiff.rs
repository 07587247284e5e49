//! Gradient and kernel oracles for the tensor engine.

use ganforge_core::composites::{activation, batchnorm, ActKind, BnMode, RunningStats};
use ganforge_core::conv;
use ganforge_core::{grad_check, Rng, Tape, Tensor};

fn random_tensor(rng: &mut Rng, shape: &[usize]) -> Tensor {
    Tensor::new(shape.to_vec(), rng.normal_vec(shape.iter().product(), 0.0, 1.0)).unwrap()
}

fn max_abs_diff(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn conv2d_scaling_identity() {
    let x = Tensor::ones(&[1, 1, 3, 3]);
    let k = Tensor::new(vec![1, 1, 1, 1], vec![2.0]).unwrap();
    let y = conv::conv2d(&x, &k, 1, 0).unwrap();
    assert_eq!(y.shape(), &[1, 1, 3, 3]);
    assert!(y.data().iter().all(|&v| v == 2.0));
}

#[test]
fn conv2d_strided_output_shape() {
    let mut rng = Rng::new(1);
    let x = random_tensor(&mut rng, &[1, 3, 64, 64]);
    let k = random_tensor(&mut rng, &[64, 3, 4, 4]);
    let y = conv::conv2d(&x, &k, 2, 1).unwrap();
    assert_eq!(y.shape(), &[1, 64, 32, 32]);
}

#[test]
fn conv2d_fast_path_matches_naive_oracle() {
    let mut rng = Rng::new(2);
    let x = random_tensor(&mut rng, &[1, 2, 5, 5]);
    let k = random_tensor(&mut rng, &[3, 2, 3, 3]);
    let fast = conv::conv2d(&x, &k, 2, 1).unwrap();
    let naive = conv::conv2d_naive(&x, &k, 2, 1).unwrap();
    assert!(max_abs_diff(&fast, &naive) < 1e-12);
}

#[test]
fn conv2d_shape_mismatch_names_axes() {
    let x = Tensor::ones(&[1, 3, 8, 8]);
    let k = Tensor::ones(&[4, 2, 3, 3]);
    let err = conv::conv2d(&x, &k, 1, 1).unwrap_err().to_string();
    assert!(err.contains("channel"), "unhelpful error: {err}");
}

#[test]
fn conv_transpose_upsamples_table_shape() {
    let mut rng = Rng::new(3);
    let x = random_tensor(&mut rng, &[1, 512, 4, 4]);
    let k = random_tensor(&mut rng, &[512, 256, 4, 4]);
    let y = conv::conv2d_transpose(&x, &k, 2, 1, None).unwrap();
    assert_eq!(y.shape(), &[1, 256, 8, 8]);
}

#[test]
fn conv_transpose_single_tap_spread() {
    let x = Tensor::new(vec![1, 1, 1, 1], vec![1.0]).unwrap();
    let k = Tensor::ones(&[1, 1, 2, 2]);
    let y = conv::conv2d_transpose(&x, &k, 1, 0, None).unwrap();
    assert_eq!(y.shape(), &[1, 1, 2, 2]);
    assert!(y.data().iter().all(|&v| v == 1.0));
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

#[test]
fn conv_transpose_is_adjoint_of_conv() {
    let mut rng = Rng::new(4);
    // <conv(x,K), y> == <x, convT(y,K)> over assorted geometries, including
    // heights that do not divide evenly by the stride.
    for &(cin, cout, h, w, k, s, p) in &[
        (1usize, 1usize, 4usize, 4usize, 3usize, 1usize, 1usize),
        (2, 3, 5, 5, 3, 2, 1),
        (3, 2, 6, 7, 4, 2, 1),
        (1, 4, 8, 5, 2, 3, 0),
    ] {
        let x = random_tensor(&mut rng, &[2, cin, h, w]);
        let kern = random_tensor(&mut rng, &[cout, cin, k, k]);
        let cx = conv::conv2d(&x, &kern, s, p).unwrap();
        let y = random_tensor(&mut rng, cx.shape());
        let ty = conv::conv2d_transpose(&y, &kern, s, p, Some((h, w))).unwrap();
        let lhs = dot(&cx, &y);
        let rhs = dot(&x, &ty);
        assert!(
            (lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0),
            "adjoint identity broken for ({cin},{cout},{h},{w},{k},{s},{p}): {lhs} vs {rhs}"
        );
    }
}

#[test]
fn conv_transpose_fast_matches_naive() {
    let mut rng = Rng::new(5);
    let x = random_tensor(&mut rng, &[2, 3, 4, 5]);
    let k = random_tensor(&mut rng, &[3, 2, 3, 3]);
    for &(s, p) in &[(1usize, 0usize), (2, 1), (3, 2)] {
        let fast = conv::conv2d_transpose(&x, &k, s, p, None).unwrap();
        let naive = conv::conv2d_transpose_naive(&x, &k, s, p, None).unwrap();
        assert!(max_abs_diff(&fast, &naive) < 1e-12);
    }
}

#[test]
fn kernel_grad_fast_matches_naive() {
    let mut rng = Rng::new(6);
    let x = random_tensor(&mut rng, &[2, 3, 6, 6]);
    let k = random_tensor(&mut rng, &[4, 3, 3, 3]);
    let y = conv::conv2d(&x, &k, 2, 1).unwrap();
    let g = random_tensor(&mut rng, y.shape());
    let fast = conv::conv2d_kernel_grad(&x, &g, 2, 1, 3).unwrap();
    let naive = conv::conv2d_kernel_grad_naive(&x, &g, 2, 1, 3).unwrap();
    assert!(max_abs_diff(&fast, &naive) < 1e-12);
}

#[test]
fn batchnorm_standardized_input_passes_through() {
    // One channel whose biased batch statistics are exactly (0, 1).
    let vals = vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
    let x = Tensor::new(vec![2, 1, 2, 2], vals.clone()).unwrap();
    let eps = 1e-5;
    let mut tape = Tape::new();
    let xid = tape.leaf(x, false);
    let gamma = tape.constant(Tensor::ones(&[1]));
    let beta = tape.constant(Tensor::zeros(&[1]));
    let mut stats = RunningStats::new(1);
    let y = batchnorm(&mut tape, xid, gamma, beta, BnMode::Train, &mut stats, eps, 0.1).unwrap();
    let expect = 1.0 / (1.0 + eps).sqrt();
    for (out, inp) in tape.value(y).data().iter().zip(&vals) {
        assert!((out - inp * expect).abs() < 1e-12);
    }
}

#[test]
fn batchnorm_constant_channel_collapses_to_beta() {
    let x = Tensor::full(&[2, 1, 2, 2], 3.7);
    let mut tape = Tape::new();
    let xid = tape.leaf(x, false);
    let gamma = tape.constant(Tensor::ones(&[1]));
    let beta = tape.constant(Tensor::full(&[1], 5.0));
    let mut stats = RunningStats::new(1);
    let y = batchnorm(&mut tape, xid, gamma, beta, BnMode::Train, &mut stats, 1e-5, 0.1).unwrap();
    for &v in tape.value(y).data() {
        assert!((v - 5.0).abs() < 1e-9);
    }
}

#[test]
fn batchnorm_matches_two_pass_oracle() {
    let mut rng = Rng::new(7);
    let x = random_tensor(&mut rng, &[4, 2, 3, 3]);
    let gamma_t = Tensor::new(vec![2], vec![1.3, 0.7]).unwrap();
    let beta_t = Tensor::new(vec![2], vec![-0.2, 0.4]).unwrap();
    let eps = 1e-5;

    let mut tape = Tape::new();
    let xid = tape.leaf(x.clone(), false);
    let gamma = tape.constant(gamma_t.clone());
    let beta = tape.constant(beta_t.clone());
    let mut stats = RunningStats::new(2);
    let yid = batchnorm(&mut tape, xid, gamma, beta, BnMode::Train, &mut stats, eps, 0.1).unwrap();
    let y = tape.value(yid).clone();

    // Explicit two-pass statistics oracle.
    let (n, c, h, w) = x.dims4().unwrap();
    let m = (n * h * w) as f64;
    for ci in 0..c {
        let mut mean = 0.0;
        for ni in 0..n {
            for p in 0..h * w {
                mean += x.data()[(ni * c + ci) * h * w + p];
            }
        }
        mean /= m;
        let mut var = 0.0;
        for ni in 0..n {
            for p in 0..h * w {
                let d = x.data()[(ni * c + ci) * h * w + p] - mean;
                var += d * d;
            }
        }
        var /= m;
        for ni in 0..n {
            for p in 0..h * w {
                let idx = (ni * c + ci) * h * w + p;
                let want = (x.data()[idx] - mean) / (var + eps).sqrt() * gamma_t.data()[ci] + beta_t.data()[ci];
                assert!((y.data()[idx] - want).abs() < 1e-12);
            }
        }
        // Running stats fold in the unbiased batch variance.
        let want_rv = 0.9 + 0.1 * var * m / (m - 1.0);
        assert!((stats.var.data()[ci] - want_rv).abs() < 1e-12);
        assert!((stats.mean.data()[ci] - 0.1 * mean).abs() < 1e-12);
    }
}

#[test]
fn batchnorm_rejects_single_element_batch() {
    let mut tape = Tape::new();
    let xid = tape.leaf(Tensor::ones(&[1, 2, 1, 1]), false);
    let gamma = tape.constant(Tensor::ones(&[2]));
    let beta = tape.constant(Tensor::zeros(&[2]));
    let mut stats = RunningStats::new(2);
    assert!(batchnorm(&mut tape, xid, gamma, beta, BnMode::Train, &mut stats, 1e-5, 0.1).is_err());
}

#[test]
fn activations_match_hand_values() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::from_vec(vec![-2.0, 0.0, 3.0]), false);
    let r = activation(&mut tape, ActKind::Relu, x).unwrap();
    assert_eq!(tape.value(r).data(), &[0.0, 0.0, 3.0]);

    let z = tape.leaf(Tensor::from_vec(vec![0.0]), false);
    let s = activation(&mut tape, ActKind::Sigmoid, z).unwrap();
    assert_eq!(tape.value(s).data(), &[0.5]);

    let m = tape.leaf(Tensor::from_vec(vec![-5.0]), false);
    let l = activation(&mut tape, ActKind::LeakyRelu(0.2), m).unwrap();
    assert!((tape.value(l).data()[0] + 1.0).abs() < 1e-15);

    assert!(activation(&mut tape, ActKind::LeakyRelu(1.5), m).is_err());
}

#[test]
fn tanh_stays_in_unit_interval() {
    let mut rng = Rng::new(8);
    let mut tape = Tape::new();
    let x = tape.leaf(random_tensor(&mut rng, &[64]).map(|v| v * 20.0), false);
    let y = tape.tanh(x);
    assert!(tape.value(y).data().iter().all(|v| (-1.0..=1.0).contains(v)));
}

#[test]
fn backward_of_sum_is_ones() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::from_vec(vec![4.0, -1.0, 2.5]), true);
    let loss = tape.sum_all(x);
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[1.0, 1.0, 1.0]);
}

#[test]
fn backward_of_tanh_at_zero_is_one() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::zeros(&[3]), true);
    let t = tape.tanh(x);
    let loss = tape.sum_all(t);
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[1.0, 1.0, 1.0]);
}

#[test]
fn backward_requires_scalar_loss() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]), true);
    let y = tape.square(x);
    assert!(tape.backward(y).is_err());
}

#[test]
fn untouched_leaf_gets_zero_gradient() {
    let mut tape = Tape::new();
    let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]), true);
    let unused = tape.leaf(Tensor::from_vec(vec![9.0]), true);
    let loss = tape.sum_all(x);
    let grads = tape.backward(loss).unwrap();
    assert_eq!(grads.get(unused).unwrap().data(), &[0.0]);
}

#[test]
fn composite_conv_bn_lrelu_matches_finite_differences() {
    let mut rng = Rng::new(9);
    let x = random_tensor(&mut rng, &[2, 2, 5, 5]);
    let kern = random_tensor(&mut rng, &[3, 2, 3, 3]);
    let gamma_t = Tensor::new(vec![3], vec![1.1, 0.9, 1.0]).unwrap();
    let beta_t = Tensor::new(vec![3], vec![0.1, -0.2, 0.0]).unwrap();

    // Gradient with respect to the image.
    let build_x = |tape: &mut Tape, xid: ganforge_core::NodeId| {
        let k = tape.constant(kern.clone());
        let g = tape.constant(gamma_t.clone());
        let b = tape.constant(beta_t.clone());
        let c = tape.conv2d(xid, k, 2, 1)?;
        let mut stats = RunningStats::new(3);
        let bn = batchnorm(tape, c, g, b, BnMode::Train, &mut stats, 1e-5, 0.1)?;
        let a = tape.leaky_relu(bn, 0.2);
        Ok(tape.sum_all(a))
    };
    let err = grad_check(build_x, &x, 1e-5).unwrap();
    assert!(err < 1e-4, "input gradient error {err}");

    // Gradient with respect to the kernel.
    let x2 = x.clone();
    let build_k = |tape: &mut Tape, kid: ganforge_core::NodeId| {
        let xin = tape.constant(x2.clone());
        let g = tape.constant(gamma_t.clone());
        let b = tape.constant(beta_t.clone());
        let c = tape.conv2d(xin, kid, 2, 1)?;
        let mut stats = RunningStats::new(3);
        let bn = batchnorm(tape, c, g, b, BnMode::Train, &mut stats, 1e-5, 0.1)?;
        let a = tape.leaky_relu(bn, 0.2);
        Ok(tape.sum_all(a))
    };
    let err = grad_check(build_k, &kern, 1e-5).unwrap();
    assert!(err < 1e-4, "kernel gradient error {err}");
}

#[test]
fn conv_transpose_gradient_matches_finite_differences() {
    let mut rng = Rng::new(10);
    let x = random_tensor(&mut rng, &[1, 3, 3, 3]);
    let kern = random_tensor(&mut rng, &[3, 2, 4, 4]);
    let kern2 = kern.clone();
    let build = |tape: &mut Tape, xid: ganforge_core::NodeId| {
        let k = tape.constant(kern2.clone());
        let y = tape.conv2d_transpose(xid, k, 2, 1)?;
        let s = tape.square(y);
        Ok(tape.sum_all(s))
    };
    let err = grad_check(build, &x, 1e-5).unwrap();
    assert!(err < 1e-4, "{err}");

    let x2 = x.clone();
    let build_k = |tape: &mut Tape, kid: ganforge_core::NodeId| {
        let xin = tape.constant(x2.clone());
        let y = tape.conv2d_transpose(xin, kid, 2, 1)?;
        let s = tape.square(y);
        Ok(tape.sum_all(s))
    };
    let err = grad_check(build_k, &kern, 1e-5).unwrap();
    assert!(err < 1e-4, "{err}");
}

#[test]
fn grad_check_is_exact_for_linear_graphs() {
    let mut rng = Rng::new(11);
    let x = random_tensor(&mut rng, &[6]);
    let w = random_tensor(&mut rng, &[6]);
    let build = |tape: &mut Tape, xid: ganforge_core::NodeId| {
        let wid = tape.constant(w.clone());
        let p = tape.mul(xid, wid)?;
        Ok(tape.sum_all(p))
    };
    let err = grad_check(build, &x, 1e-5).unwrap();
    assert!(err < 1e-10, "{err}");
}

#[test]
fn second_order_gradients_match_finite_differences() {
    // penalty(w) = sum_coords (d sum(D(x)) / dx)^2 for a small conv critic;
    // its gradient w.r.t. w exercises differentiating through backward.
    let mut rng = Rng::new(12);
    let x = random_tensor(&mut rng, &[1, 2, 4, 4]);
    let w1 = random_tensor(&mut rng, &[2, 2, 3, 3]);

    let penalty = |w: &Tensor| -> (f64, Option<Tensor>) {
        let mut tape = Tape::new();
        let xid = tape.leaf(x.clone(), true);
        let wid = tape.leaf(w.clone(), true);
        let c = tape.conv2d(xid, wid, 1, 1).unwrap();
        let a = tape.leaky_relu(c, 0.2);
        let out = tape.sum_all(a);
        let gx = tape.grad_nodes(out, &[xid]).unwrap()[0].unwrap();
        let sq = tape.square(gx);
        let pen = tape.sum_all(sq);
        let value = tape.value(pen).scalar_value().unwrap();
        let gw = tape.grad_nodes(pen, &[wid]).unwrap()[0].map(|id| tape.value(id).clone());
        (value, gw)
    };

    let (_, gw) = penalty(&w1);
    let gw = gw.expect("penalty depends on weights");
    let h = 1e-5;
    let mut probe = w1.clone();
    for i in 0..w1.elems() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let (fp, _) = penalty(&probe);
        probe.data_mut()[i] = orig - h;
        let (fm, _) = penalty(&probe);
        probe.data_mut()[i] = orig;
        let cd = (fp - fm) / (2.0 * h);
        let rel = (gw.data()[i] - cd).abs() / cd.abs().max(1.0);
        assert!(rel < 1e-4, "coordinate {i}: analytic {} vs central {cd}", gw.data()[i]);
    }
}

#[test]
fn tape_reductions_and_broadcasts_are_adjoint_pairs() {
    let mut rng = Rng::new(13);
    let x = random_tensor(&mut rng, &[3, 2, 2, 2]);
    for mode in 0..3 {
        let build = move |tape: &mut Tape, xid: ganforge_core::NodeId| {
            let r = match mode {
                0 => tape.sum_chan(xid)?,
                1 => tape.sum_spatial(xid)?,
                _ => tape.sum_per_sample(xid)?,
            };
            let s = tape.square(r);
            Ok(tape.sum_all(s))
        };
        let err = grad_check(build, &x, 1e-6).unwrap();
        assert!(err < 1e-7, "reduction mode {mode}: {err}");
    }
}

#[test]
fn matmul_gradients_match_finite_differences() {
    let mut rng = Rng::new(14);
    let a = random_tensor(&mut rng, &[3, 4]);
    let b = random_tensor(&mut rng, &[4, 2]);
    let b2 = b.clone();
    let build = |tape: &mut Tape, aid: ganforge_core::NodeId| {
        let bid = tape.constant(b2.clone());
        let m = tape.matmul(aid, bid)?;
        let s = tape.square(m);
        Ok(tape.sum_all(s))
    };
    assert!(grad_check(build, &a, 1e-6).unwrap() < 1e-6);

    let a2 = a.clone();
    let build_b = |tape: &mut Tape, bid: ganforge_core::NodeId| {
        let aid = tape.constant(a2.clone());
        let m = tape.matmul(aid, bid)?;
        let s = tape.square(m);
        Ok(tape.sum_all(s))
    };
    assert!(grad_check(build_b, &b, 1e-6).unwrap() < 1e-6);
}
