//! Separable bicubic resampling with the conventions of MATLAB's `imresize`.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Down,
    Up,
}

/// Keys cubic with `a = -0.5`.
pub fn cubic(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 {
        1.5 * ax.powi(3) - 2.5 * ax * ax + 1.0
    } else if ax <= 2.0 {
        -0.5 * ax.powi(3) + 2.5 * ax * ax - 4.0 * ax + 2.0
    } else {
        0.0
    }
}

/// Half-sample symmetric reflection of a possibly out-of-range index.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// Input indices and normalized weights for every output sample along one axis.
///
/// Output sample `i` (0-based) maps to input coordinate `(i + 0.5)/s - 0.5`. When
/// shrinking, the kernel is stretched by `1/s` to band-limit the input.
fn contributions(in_len: usize, out_len: usize) -> Vec<Vec<(usize, f64)>> {
    let s = out_len as f64 / in_len as f64;
    let (stretch, width) = if s < 1.0 { (s, 4.0 / s) } else { (1.0, 4.0) };
    (0..out_len)
        .map(|i| {
            let u = (i as f64 + 0.5) / s - 0.5;
            let left = (u - width / 2.0).floor() as isize;
            let taps = width.ceil() as isize + 2;
            let mut w: Vec<(usize, f64)> = (left..left + taps)
                .map(|j| {
                    (
                        reflect(j, in_len),
                        stretch * cubic(stretch * (u - j as f64)),
                    )
                })
                .filter(|&(_, v)| v != 0.0)
                .collect();
            let total: f64 = w.iter().map(|&(_, v)| v).sum();
            w.iter_mut().for_each(|(_, v)| *v /= total);
            w
        })
        .collect()
}

/// Resamples every plane of `image` to `out_h × out_w`, rows first.
pub fn resize_to(image: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let [b, c, h, w] = image.shape();
    if out_h == 0 || out_w == 0 || h == 0 || w == 0 {
        return Err(Error::shape(format!(
            "cannot resize {h}x{w} to {out_h}x{out_w}"
        )));
    }
    let cw = contributions(w, out_w);
    let ch = contributions(h, out_h);
    let horizontal = Tensor::from_fn([b, c, h, out_w], |bi, ci, y, x| {
        cw[x].iter().map(|&(j, v)| v * image.at(bi, ci, y, j)).sum()
    });
    Ok(Tensor::from_fn([b, c, out_h, out_w], |bi, ci, y, x| {
        ch[y]
            .iter()
            .map(|&(j, v)| v * horizontal.at(bi, ci, j, x))
            .sum()
    }))
}

/// Shrinks or enlarges by `factor`; the output side is `ceil(side / factor)` when going
/// down and `ceil(side · factor)` when going up.
pub fn bicubic_resize(image: &Tensor, factor: f64, direction: Direction) -> Result<Tensor> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::config(format!(
            "resize factor must be positive, got {factor}"
        )));
    }
    let [_, _, h, w] = image.shape();
    let target = |n: usize| match direction {
        Direction::Down => (n as f64 / factor - 1e-9).ceil() as usize,
        Direction::Up => (n as f64 * factor - 1e-9).ceil() as usize,
    };
    resize_to(image, target(h), target(w))
}
