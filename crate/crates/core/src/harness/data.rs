//! Training pairs: bicubic degradation, synthetic gratings, crops and augmentation.

use std::f64::consts::PI;

use rand::Rng;

use super::resize::{bicubic_resize, Direction};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Crops `hr` to a multiple of `scale` and shrinks it by `scale`. Returns `(lr, hr)`.
pub fn degrade(hr: &Tensor, scale: usize) -> Result<(Tensor, Tensor)> {
    let [b, c, h, w] = hr.shape();
    if scale == 0 || h < scale || w < scale {
        return Err(Error::shape(format!(
            "cannot degrade a {h}x{w} image by {scale}"
        )));
    }
    let (ch, cw) = (h - h % scale, w - w % scale);
    let hr = Tensor::from_fn([b, c, ch, cw], |bi, ci, y, x| hr.at(bi, ci, y, x));
    // Bicubic overshoot is clipped so LR images stay valid PNG data.
    let lr = bicubic_resize(&hr, scale as f64, Direction::Down)?.clamp(0.0, 1.0);
    Ok((lr, hr))
}

/// One oriented sinusoidal grating per call: random angle from eight directions, random
/// period, phase and pair of colours, `(1, 3, size, size)` in [0.1, 0.9].
pub fn stripes<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Tensor {
    let angle = rng.gen_range(0..8) as f64 * PI / 8.0;
    let period = rng.gen_range(3.0..10.0);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let lo: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.1..0.4));
    let hi: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.6..0.9));
    let (ca, sa) = (angle.cos(), angle.sin());
    Tensor::from_fn([1, 3, size, size], |_, c, y, x| {
        let t = 0.5 + 0.5 * ((2.0 * PI * (x as f64 * ca + y as f64 * sa) / period) + phase).sin();
        lo[c] + (hi[c] - lo[c]) * t
    })
}

/// Applies one of the eight flips/rotations of the square symmetry group: bit 0 flips
/// horizontally, bit 1 flips vertically, bit 2 transposes.
pub fn augment(image: &Tensor, mode: usize) -> Tensor {
    let [b, c, h, w] = image.shape();
    let transpose = mode & 4 != 0;
    let (oh, ow) = if transpose { (w, h) } else { (h, w) };
    Tensor::from_fn([b, c, oh, ow], |bi, ci, y, x| {
        let (mut sy, mut sx) = if transpose { (x, y) } else { (y, x) };
        if mode & 1 != 0 {
            sx = w - 1 - sx;
        }
        if mode & 2 != 0 {
            sy = h - 1 - sy;
        }
        image.at(bi, ci, sy, sx)
    })
}

/// Random aligned crop of `patch × patch` LR pixels and the matching HR region.
pub fn random_crop<R: Rng + ?Sized>(
    lr: &Tensor,
    hr: &Tensor,
    patch: usize,
    scale: usize,
    rng: &mut R,
) -> Result<(Tensor, Tensor)> {
    let [_, c, h, w] = lr.shape();
    if hr.shape() != [1, c, h * scale, w * scale] {
        return Err(Error::shape(format!(
            "HR {:?} is not LR {:?} times {scale}",
            hr.shape(),
            lr.shape()
        )));
    }
    if patch > h || patch > w || patch == 0 {
        return Err(Error::shape(format!(
            "patch {patch} does not fit a {h}x{w} LR image"
        )));
    }
    let (y0, x0) = (rng.gen_range(0..=h - patch), rng.gen_range(0..=w - patch));
    let lr_patch = Tensor::from_fn([1, c, patch, patch], |_, ci, y, x| {
        lr.at(0, ci, y0 + y, x0 + x)
    });
    let hp = patch * scale;
    let hr_patch = Tensor::from_fn([1, c, hp, hp], |_, ci, y, x| {
        hr.at(0, ci, y0 * scale + y, x0 * scale + x)
    });
    Ok((lr_patch, hr_patch))
}

/// Largest top-left crop whose sides are multiples of `m`.
pub fn crop_to_multiple(image: &Tensor, m: usize) -> Result<Tensor> {
    let [b, c, h, w] = image.shape();
    let (ch, cw) = (h - h % m, w - w % m);
    if ch == 0 || cw == 0 {
        return Err(Error::shape(format!("{h}x{w} image is smaller than {m}")));
    }
    Ok(Tensor::from_fn([b, c, ch, cw], |bi, ci, y, x| {
        image.at(bi, ci, y, x)
    }))
}
