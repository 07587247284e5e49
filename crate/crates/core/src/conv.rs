//! 2-D convolution kernels: a patch-matrix fast path and naive loop
//! references. The two must agree to 1e-12; tests hold them to that.
//!
//! Layout conventions: inputs are `N x C x H x W`, convolution kernels are
//! `Cout x Cin x k x k`, transposed-convolution kernels are `Cin x Cout x k x k`
//! (the same buffer a convolution would use, reinterpreted, which makes the
//! transpose the exact adjoint of the convolution).

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

/// Output spatial extent of a convolution, `floor((d + 2p - k)/s) + 1`.
pub fn conv_out_dim(d: usize, k: usize, stride: usize, pad: usize) -> Option<usize> {
    let span = d + 2 * pad;
    if span < k {
        return None;
    }
    Some((span - k) / stride + 1)
}

/// Canonical output extent of a transposed convolution, `(d-1)s - 2p + k`.
pub fn conv_transpose_out_dim(d: usize, k: usize, stride: usize, pad: usize) -> Option<usize> {
    let grown = (d - 1) * stride + k;
    if grown < 2 * pad + 1 {
        return None;
    }
    Some(grown - 2 * pad)
}

fn check_stride(op: &'static str, stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(TensorError::Invalid(format!("{op}: stride must be positive")));
    }
    Ok(())
}

fn conv_shapes(x: &Tensor, w: &Tensor, stride: usize, pad: usize) -> Result<(usize, usize, usize, usize, usize, usize, usize, usize)> {
    let (n, cin, h, wd) = x.dims4()?;
    let (cout, wcin, kh, kw) = w.dims4()?;
    if kh != kw {
        return Err(TensorError::shape("conv2d", format!("kernel must be square, got {kh}x{kw}")));
    }
    if wcin != cin {
        return Err(TensorError::shape(
            "conv2d",
            format!("input channel axis is {cin} but kernel axis 1 expects {wcin}"),
        ));
    }
    let ho = conv_out_dim(h, kh, stride, pad)
        .ok_or_else(|| TensorError::shape("conv2d", format!("height {h} too small for kernel {kh}, pad {pad}")))?;
    let wo = conv_out_dim(wd, kw, stride, pad)
        .ok_or_else(|| TensorError::shape("conv2d", format!("width {wd} too small for kernel {kw}, pad {pad}")))?;
    Ok((n, cin, h, wd, cout, kh, ho, wo))
}

/// Direct quadruple-loop convolution, the reference implementation.
pub fn conv2d_naive(x: &Tensor, w: &Tensor, stride: usize, pad: usize) -> Result<Tensor> {
    check_stride("conv2d", stride)?;
    let (n, cin, h, wd, cout, k, ho, wo) = conv_shapes(x, w, stride, pad)?;
    let xd = x.data();
    let wdat = w.data();
    let mut out = vec![0.0; n * cout * ho * wo];
    for ni in 0..n {
        for o in 0..cout {
            for i in 0..ho {
                for j in 0..wo {
                    let mut acc = 0.0;
                    for c in 0..cin {
                        for u in 0..k {
                            let r = (i * stride + u) as isize - pad as isize;
                            if r < 0 || r as usize >= h {
                                continue;
                            }
                            for v in 0..k {
                                let s = (j * stride + v) as isize - pad as isize;
                                if s < 0 || s as usize >= wd {
                                    continue;
                                }
                                acc += xd[((ni * cin + c) * h + r as usize) * wd + s as usize]
                                    * wdat[((o * cin + c) * k + u) * k + v];
                            }
                        }
                    }
                    out[((ni * cout + o) * ho + i) * wo + j] = acc;
                }
            }
        }
    }
    Tensor::new(vec![n, cout, ho, wo], out)
}

/// Gather the `Cin*k*k x Ho*Wo` patch matrix for one sample.
fn im2col(xd: &[f64], cin: usize, h: usize, w: usize, k: usize, stride: usize, pad: usize, ho: usize, wo: usize, patches: &mut [f64]) {
    let cols = ho * wo;
    for c in 0..cin {
        let plane = &xd[c * h * w..(c + 1) * h * w];
        for u in 0..k {
            for v in 0..k {
                let row = &mut patches[((c * k + u) * k + v) * cols..((c * k + u) * k + v + 1) * cols];
                for i in 0..ho {
                    let r = (i * stride + u) as isize - pad as isize;
                    let dst = &mut row[i * wo..(i + 1) * wo];
                    if r < 0 || r as usize >= h {
                        dst.fill(0.0);
                        continue;
                    }
                    let src = &plane[r as usize * w..(r as usize + 1) * w];
                    for (j, d) in dst.iter_mut().enumerate() {
                        let s = (j * stride + v) as isize - pad as isize;
                        *d = if s < 0 || s as usize >= w { 0.0 } else { src[s as usize] };
                    }
                }
            }
        }
    }
}

/// Patch-matrix convolution; bit-compatible accumulation order with the
/// naive path is not guaranteed, agreement within 1e-12 is.
pub fn conv2d(x: &Tensor, w: &Tensor, stride: usize, pad: usize) -> Result<Tensor> {
    check_stride("conv2d", stride)?;
    let (n, cin, h, wd, cout, k, ho, wo) = conv_shapes(x, w, stride, pad)?;
    let xd = x.data();
    let wdat = w.data();
    let cols = ho * wo;
    let krows = cin * k * k;
    let mut patches = vec![0.0; krows * cols];
    let mut out = vec![0.0; n * cout * cols];
    for ni in 0..n {
        im2col(&xd[ni * cin * h * wd..], cin, h, wd, k, stride, pad, ho, wo, &mut patches);
        let dst = &mut out[ni * cout * cols..(ni + 1) * cout * cols];
        for o in 0..cout {
            let wrow = &wdat[o * krows..(o + 1) * krows];
            let orow = &mut dst[o * cols..(o + 1) * cols];
            for (a, prow) in wrow.iter().zip(patches.chunks_exact(cols)) {
                if *a == 0.0 {
                    continue;
                }
                for (dv, pv) in orow.iter_mut().zip(prow) {
                    *dv += a * pv;
                }
            }
        }
    }
    Tensor::new(vec![n, cout, ho, wo], out)
}

fn convt_shapes(x: &Tensor, w: &Tensor, stride: usize, pad: usize, out_hw: Option<(usize, usize)>) -> Result<(usize, usize, usize, usize, usize, usize, usize, usize)> {
    let (n, cin, h, wd) = x.dims4()?;
    let (wcin, cout, kh, kw) = w.dims4()?;
    if kh != kw {
        return Err(TensorError::shape("conv2d_transpose", format!("kernel must be square, got {kh}x{kw}")));
    }
    if wcin != cin {
        return Err(TensorError::shape(
            "conv2d_transpose",
            format!("input channel axis is {cin} but kernel axis 0 expects {wcin}"),
        ));
    }
    let (ho, wo) = match out_hw {
        Some(hw) => hw,
        None => {
            let ho = conv_transpose_out_dim(h, kh, stride, pad).ok_or_else(|| {
                TensorError::shape("conv2d_transpose", format!("height {h} collapses under pad {pad}"))
            })?;
            let wo = conv_transpose_out_dim(wd, kw, stride, pad).ok_or_else(|| {
                TensorError::shape("conv2d_transpose", format!("width {wd} collapses under pad {pad}"))
            })?;
            (ho, wo)
        }
    };
    if ho == 0 || wo == 0 {
        return Err(TensorError::shape("conv2d_transpose", "requested empty output".to_string()));
    }
    Ok((n, cin, h, wd, cout, kh, ho, wo))
}

/// Direct scatter-loop transposed convolution.
pub fn conv2d_transpose_naive(x: &Tensor, w: &Tensor, stride: usize, pad: usize, out_hw: Option<(usize, usize)>) -> Result<Tensor> {
    check_stride("conv2d_transpose", stride)?;
    let (n, cin, h, wd, cout, k, ho, wo) = convt_shapes(x, w, stride, pad, out_hw)?;
    let xd = x.data();
    let wdat = w.data();
    let mut out = vec![0.0; n * cout * ho * wo];
    for ni in 0..n {
        for c in 0..cin {
            for i in 0..h {
                for j in 0..wd {
                    let xv = xd[((ni * cin + c) * h + i) * wd + j];
                    if xv == 0.0 {
                        continue;
                    }
                    for o in 0..cout {
                        for u in 0..k {
                            let r = (i * stride + u) as isize - pad as isize;
                            if r < 0 || r as usize >= ho {
                                continue;
                            }
                            for v in 0..k {
                                let s = (j * stride + v) as isize - pad as isize;
                                if s < 0 || s as usize >= wo {
                                    continue;
                                }
                                out[((ni * cout + o) * ho + r as usize) * wo + s as usize]
                                    += xv * wdat[((c * cout + o) * k + u) * k + v];
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![n, cout, ho, wo], out)
}

/// Matrix-form transposed convolution: `W^T @ x` per sample followed by a
/// column-to-image scatter. Writes that fall outside the requested output
/// are dropped, which is exactly the adjoint of zero-padded reads.
pub fn conv2d_transpose(x: &Tensor, w: &Tensor, stride: usize, pad: usize, out_hw: Option<(usize, usize)>) -> Result<Tensor> {
    check_stride("conv2d_transpose", stride)?;
    let (n, cin, h, wd, cout, k, ho, wo) = convt_shapes(x, w, stride, pad, out_hw)?;
    let xd = x.data();
    let wdat = w.data();
    let cols = h * wd;
    let krows = cout * k * k;
    let mut mixed = vec![0.0; krows * cols];
    let mut out = vec![0.0; n * cout * ho * wo];
    for ni in 0..n {
        mixed.fill(0.0);
        // mixed[(o,u,v), (i,j)] = sum_c W[c,(o,u,v)] * x[c,(i,j)]
        for c in 0..cin {
            let xrow = &xd[(ni * cin + c) * cols..(ni * cin + c + 1) * cols];
            let wrow = &wdat[c * krows..(c + 1) * krows];
            for (a, mrow) in wrow.iter().zip(mixed.chunks_exact_mut(cols)) {
                if *a == 0.0 {
                    continue;
                }
                for (m, xv) in mrow.iter_mut().zip(xrow) {
                    *m += a * xv;
                }
            }
        }
        let dst = &mut out[ni * cout * ho * wo..(ni + 1) * cout * ho * wo];
        for o in 0..cout {
            for u in 0..k {
                for v in 0..k {
                    let mrow = &mixed[((o * k + u) * k + v) * cols..((o * k + u) * k + v + 1) * cols];
                    for i in 0..h {
                        let r = (i * stride + u) as isize - pad as isize;
                        if r < 0 || r as usize >= ho {
                            continue;
                        }
                        for j in 0..wd {
                            let s = (j * stride + v) as isize - pad as isize;
                            if s < 0 || s as usize >= wo {
                                continue;
                            }
                            dst[(o * ho + r as usize) * wo + s as usize] += mrow[i * wd + j];
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![n, cout, ho, wo], out)
}

/// Gradient of `conv2d(x, w)` with respect to `w`, given upstream `g` of
/// shape `N x Cout x Ho x Wo`. Returns a `Cout x Cin x k x k` tensor.
pub fn conv2d_kernel_grad(x: &Tensor, g: &Tensor, stride: usize, pad: usize, k: usize) -> Result<Tensor> {
    check_stride("conv2d_kernel_grad", stride)?;
    let (n, cin, h, wd) = x.dims4()?;
    let (gn, cout, ho, wo) = g.dims4()?;
    if gn != n {
        return Err(TensorError::shape(
            "conv2d_kernel_grad",
            format!("batch axis mismatch: input {n} vs upstream {gn}"),
        ));
    }
    let xd = x.data();
    let gd = g.data();
    let cols = ho * wo;
    let krows = cin * k * k;
    let mut patches = vec![0.0; krows * cols];
    let mut out = vec![0.0; cout * krows];
    for ni in 0..n {
        im2col(&xd[ni * cin * h * wd..], cin, h, wd, k, stride, pad, ho, wo, &mut patches);
        for o in 0..cout {
            let grow = &gd[(ni * cout + o) * cols..(ni * cout + o + 1) * cols];
            let orow = &mut out[o * krows..(o + 1) * krows];
            for (dv, prow) in orow.iter_mut().zip(patches.chunks_exact(cols)) {
                let mut acc = 0.0;
                for (gv, pv) in grow.iter().zip(prow) {
                    acc += gv * pv;
                }
                *dv += acc;
            }
        }
    }
    Tensor::new(vec![cout, cin, k, k], out)
}

/// Loop reference for [`conv2d_kernel_grad`].
pub fn conv2d_kernel_grad_naive(x: &Tensor, g: &Tensor, stride: usize, pad: usize, k: usize) -> Result<Tensor> {
    check_stride("conv2d_kernel_grad", stride)?;
    let (n, cin, h, wd) = x.dims4()?;
    let (_, cout, ho, wo) = g.dims4()?;
    let xd = x.data();
    let gd = g.data();
    let mut out = vec![0.0; cout * cin * k * k];
    for o in 0..cout {
        for c in 0..cin {
            for u in 0..k {
                for v in 0..k {
                    let mut acc = 0.0;
                    for ni in 0..n {
                        for i in 0..ho {
                            let r = (i * stride + u) as isize - pad as isize;
                            if r < 0 || r as usize >= h {
                                continue;
                            }
                            for j in 0..wo {
                                let s = (j * stride + v) as isize - pad as isize;
                                if s < 0 || s as usize >= wd {
                                    continue;
                                }
                                acc += gd[((ni * cout + o) * ho + i) * wo + j]
                                    * xd[((ni * cin + c) * h + r as usize) * wd + s as usize];
                            }
                        }
                    }
                    out[((o * cin + c) * k + u) * k + v] = acc;
                }
            }
        }
    }
    Tensor::new(vec![cout, cin, k, k], out)
}
