use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

/// How samples outside the image are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Zero,
}

/// Output extent for a same-padded convolution.
pub fn conv_output_len(input: usize, stride: usize) -> usize {
    input.div_ceil(stride)
}

/// Source index for each output position at kernel tap `tap`, or `None` when it falls
/// into zero padding.
fn source_indices(
    out_len: usize,
    in_len: usize,
    stride: usize,
    tap: usize,
    pad_before: usize,
    boundary: Boundary,
) -> Vec<Option<usize>> {
    (0..out_len)
        .map(|i| {
            let p = (i * stride + tap) as isize - pad_before as isize;
            match boundary {
                Boundary::Periodic => Some(p.rem_euclid(in_len as isize) as usize),
                Boundary::Zero => (p >= 0 && (p as usize) < in_len).then_some(p as usize),
            }
        })
        .collect()
}

fn check(input: [usize; 4], kernel: [usize; 4], stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(Error::shape("conv2d: stride must be at least 1"));
    }
    if kernel[1] != input[1] {
        return Err(Error::shape(format!(
            "conv2d: kernel expects {} input channels but input has {}",
            kernel[1], input[1]
        )));
    }
    if kernel[2] == 0 || kernel[3] == 0 {
        return Err(Error::shape("conv2d: kernel has an empty spatial extent"));
    }
    if input[2] == 0 || input[3] == 0 {
        return Err(Error::shape("conv2d: input has an empty spatial extent"));
    }
    Ok(())
}

struct Taps {
    rows: Vec<Vec<Option<usize>>>,
    cols: Vec<Vec<Option<usize>>>,
    out_h: usize,
    out_w: usize,
}

fn taps(input: [usize; 4], kernel: [usize; 4], stride: usize, boundary: Boundary) -> Taps {
    let (h, w) = (input[2], input[3]);
    let (kh, kw) = (kernel[2], kernel[3]);
    let out_h = conv_output_len(h, stride);
    let out_w = conv_output_len(w, stride);
    let rows = (0..kh)
        .map(|a| source_indices(out_h, h, stride, a, (kh - 1) / 2, boundary))
        .collect();
    let cols = (0..kw)
        .map(|b| source_indices(out_w, w, stride, b, (kw - 1) / 2, boundary))
        .collect();
    Taps {
        rows,
        cols,
        out_h,
        out_w,
    }
}

/// 2-D cross-correlation with same-size output for stride 1.
///
/// `kernel` has shape (out_c, in_c, kh, kw). Padding is `(k-1)/2` before and the rest
/// after along each axis.
pub fn conv2d(
    input: &Tensor,
    kernel: &Tensor,
    stride: usize,
    boundary: Boundary,
) -> Result<Tensor> {
    check(input.shape(), kernel.shape(), stride)?;
    let [batch, in_c, h, w] = input.shape();
    let [out_c, _, kh, kw] = kernel.shape();
    let t = taps(input.shape(), kernel.shape(), stride, boundary);
    let mut out = Tensor::zeros([batch, out_c, t.out_h, t.out_w]);
    let (x, k) = (input.data(), kernel.data());
    let plane = t.out_h * t.out_w;
    let o_data = out.data_mut();
    for b in 0..batch {
        for o in 0..out_c {
            let dst = &mut o_data[(b * out_c + o) * plane..(b * out_c + o + 1) * plane];
            for c in 0..in_c {
                let src = &x[(b * in_c + c) * h * w..(b * in_c + c + 1) * h * w];
                for a in 0..kh {
                    for bb in 0..kw {
                        let kv = k[((o * in_c + c) * kh + a) * kw + bb];
                        if kv == 0.0 {
                            continue;
                        }
                        for (i, row) in t.rows[a].iter().enumerate() {
                            let Some(row) = row else { continue };
                            let src_row = &src[row * w..(row + 1) * w];
                            let dst_row = &mut dst[i * t.out_w..(i + 1) * t.out_w];
                            for (d, col) in dst_row.iter_mut().zip(&t.cols[bb]) {
                                if let Some(col) = col {
                                    *d += kv * src_row[*col];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Transpose of [`conv2d`] with respect to its input: maps an output cotangent back to
/// the input space.
pub fn conv2d_input_adjoint(
    grad_out: &Tensor,
    kernel: &Tensor,
    input_shape: [usize; 4],
    stride: usize,
    boundary: Boundary,
) -> Result<Tensor> {
    check(input_shape, kernel.shape(), stride)?;
    let [batch, in_c, h, w] = input_shape;
    let [out_c, _, kh, kw] = kernel.shape();
    let t = taps(input_shape, kernel.shape(), stride, boundary);
    if grad_out.shape() != [batch, out_c, t.out_h, t.out_w] {
        return Err(Error::shape(format!(
            "conv2d adjoint: cotangent {:?} does not match output {:?}",
            grad_out.shape(),
            [batch, out_c, t.out_h, t.out_w]
        )));
    }
    let mut gx = Tensor::zeros(input_shape);
    let (g, k) = (grad_out.data(), kernel.data());
    let plane = t.out_h * t.out_w;
    let gx_data = gx.data_mut();
    for b in 0..batch {
        for o in 0..out_c {
            let go = &g[(b * out_c + o) * plane..(b * out_c + o + 1) * plane];
            for c in 0..in_c {
                let dst = &mut gx_data[(b * in_c + c) * h * w..(b * in_c + c + 1) * h * w];
                for a in 0..kh {
                    for bb in 0..kw {
                        let kv = k[((o * in_c + c) * kh + a) * kw + bb];
                        if kv == 0.0 {
                            continue;
                        }
                        for (i, row) in t.rows[a].iter().enumerate() {
                            let Some(row) = row else { continue };
                            let go_row = &go[i * t.out_w..(i + 1) * t.out_w];
                            for (gv, col) in go_row.iter().zip(&t.cols[bb]) {
                                if let Some(col) = col {
                                    dst[row * w + col] += kv * gv;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(gx)
}

/// Gradient of `<conv2d(input, kernel), grad_out>` with respect to the kernel.
pub fn conv2d_kernel_grad(
    grad_out: &Tensor,
    input: &Tensor,
    kernel_shape: [usize; 4],
    stride: usize,
    boundary: Boundary,
) -> Result<Tensor> {
    check(input.shape(), kernel_shape, stride)?;
    let [batch, in_c, h, w] = input.shape();
    let [out_c, _, kh, kw] = kernel_shape;
    let t = taps(input.shape(), kernel_shape, stride, boundary);
    if grad_out.shape() != [batch, out_c, t.out_h, t.out_w] {
        return Err(Error::shape(format!(
            "conv2d kernel grad: cotangent {:?} does not match output {:?}",
            grad_out.shape(),
            [batch, out_c, t.out_h, t.out_w]
        )));
    }
    let mut gk = Tensor::zeros(kernel_shape);
    let (g, x) = (grad_out.data(), input.data());
    let plane = t.out_h * t.out_w;
    let gk_data = gk.data_mut();
    for b in 0..batch {
        for o in 0..out_c {
            let go = &g[(b * out_c + o) * plane..(b * out_c + o + 1) * plane];
            for c in 0..in_c {
                let src = &x[(b * in_c + c) * h * w..(b * in_c + c + 1) * h * w];
                for a in 0..kh {
                    for bb in 0..kw {
                        let mut acc = 0.0;
                        for (i, row) in t.rows[a].iter().enumerate() {
                            let Some(row) = row else { continue };
                            let go_row = &go[i * t.out_w..(i + 1) * t.out_w];
                            for (gv, col) in go_row.iter().zip(&t.cols[bb]) {
                                if let Some(col) = col {
                                    acc += gv * src[row * w + col];
                                }
                            }
                        }
                        gk_data[((o * in_c + c) * kh + a) * kw + bb] += acc;
                    }
                }
            }
        }
    }
    Ok(gk)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Straight six-deep loop, no index tables.
    fn reference(input: &Tensor, kernel: &Tensor, stride: usize, boundary: Boundary) -> Tensor {
        let [batch, in_c, h, w] = input.shape();
        let [out_c, _, kh, kw] = kernel.shape();
        let (oh, ow) = (h.div_ceil(stride), w.div_ceil(stride));
        Tensor::from_fn([batch, out_c, oh, ow], |b, o, i, j| {
            let mut acc = 0.0;
            for c in 0..in_c {
                for a in 0..kh {
                    for bb in 0..kw {
                        let y = (i * stride + a) as isize - ((kh - 1) / 2) as isize;
                        let x = (j * stride + bb) as isize - ((kw - 1) / 2) as isize;
                        let v = match boundary {
                            Boundary::Periodic => input.at(
                                b,
                                c,
                                y.rem_euclid(h as isize) as usize,
                                x.rem_euclid(w as isize) as usize,
                            ),
                            Boundary::Zero => {
                                if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
                                    0.0
                                } else {
                                    input.at(b, c, y as usize, x as usize)
                                }
                            }
                        };
                        acc += kernel.at(o, c, a, bb) * v;
                    }
                }
            }
            acc
        })
    }

    #[test]
    fn identity_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::random_uniform([2, 3, 5, 4], -1.0, 1.0, &mut rng);
        let k = Tensor::from_fn([3, 3, 1, 1], |o, c, _, _| if o == c { 1.0 } else { 0.0 });
        assert_eq!(conv2d(&x, &k, 1, Boundary::Periodic).unwrap(), x);
        assert_eq!(conv2d(&x, &k, 1, Boundary::Zero).unwrap(), x);
    }

    #[test]
    fn zero_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Tensor::random_uniform([1, 2, 6, 6], -1.0, 1.0, &mut rng);
        let k = Tensor::zeros([4, 2, 3, 3]);
        let y = conv2d(&x, &k, 1, Boundary::Periodic).unwrap();
        assert_eq!(y, Tensor::zeros([1, 4, 6, 6]));
    }

    #[test]
    fn averaging_kernel_on_ramp() {
        let x = Tensor::from_fn([1, 1, 4, 4], |_, _, y, x| (4 * y + x) as f64);
        let k = Tensor::full([1, 1, 3, 3], 1.0 / 9.0);
        let y = conv2d(&x, &k, 1, Boundary::Periodic).unwrap();
        let expect = reference(&x, &k, 1, Boundary::Periodic);
        assert!(y.max_abs_diff(&expect).unwrap() < 1e-14);
        // Interior pixel (1,1) averages the 3x3 block around 5.
        assert!((y.at(0, 0, 1, 1) - 5.0).abs() < 1e-14);
        // Corner (0,0) wraps: rows {3,0,1}, cols {3,0,1}.
        let corner: f64 = [3usize, 0, 1]
            .iter()
            .flat_map(|&r| [3usize, 0, 1].map(move |c| (4 * r + c) as f64))
            .sum::<f64>()
            / 9.0;
        assert!((y.at(0, 0, 0, 0) - corner).abs() < 1e-14);
    }

    #[test]
    fn matches_reference_strided_and_even_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(stride, kh, kw) in &[(1, 2, 4), (2, 3, 3), (3, 1, 2), (2, 5, 5)] {
            for boundary in [Boundary::Periodic, Boundary::Zero] {
                let x = Tensor::random_uniform([2, 2, 7, 6], -1.0, 1.0, &mut rng);
                let k = Tensor::random_uniform([3, 2, kh, kw], -1.0, 1.0, &mut rng);
                let y = conv2d(&x, &k, stride, boundary).unwrap();
                let r = reference(&x, &k, stride, boundary);
                assert!(y.max_abs_diff(&r).unwrap() < 1e-13);
            }
        }
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let x = Tensor::zeros([1, 3, 4, 4]);
        let k = Tensor::zeros([1, 2, 3, 3]);
        let err = conv2d(&x, &k, 1, Boundary::Periodic).unwrap_err();
        assert!(err.to_string().contains("input channels"));
        assert!(conv2d(&x, &Tensor::zeros([1, 3, 3, 3]), 0, Boundary::Zero).is_err());
    }

    #[test]
    fn periodic_conv_commutes_with_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Tensor::random_uniform([1, 2, 9, 7], -1.0, 1.0, &mut rng);
        let k = Tensor::random_uniform([2, 2, 4, 3], -1.0, 1.0, &mut rng);
        let a = conv2d(&x.roll(2, -3), &k, 1, Boundary::Periodic).unwrap();
        let b = conv2d(&x, &k, 1, Boundary::Periodic).unwrap().roll(2, -3);
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn adjoint_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(stride, boundary) in &[
            (1, Boundary::Periodic),
            (2, Boundary::Zero),
            (1, Boundary::Zero),
        ] {
            let x = Tensor::random_uniform([2, 3, 6, 5], -1.0, 1.0, &mut rng);
            let k = Tensor::random_uniform([4, 3, 3, 2], -1.0, 1.0, &mut rng);
            let y = conv2d(&x, &k, stride, boundary).unwrap();
            let v = Tensor::random_uniform(y.shape(), -1.0, 1.0, &mut rng);
            let lhs = y.dot(&v).unwrap();
            let gx = conv2d_input_adjoint(&v, &k, x.shape(), stride, boundary).unwrap();
            let gk = conv2d_kernel_grad(&v, &x, k.shape(), stride, boundary).unwrap();
            assert!((lhs - x.dot(&gx).unwrap()).abs() <= 1e-9 * lhs.abs().max(1.0));
            assert!((lhs - k.dot(&gk).unwrap()).abs() <= 1e-9 * lhs.abs().max(1.0));
        }
    }
}
