//! PSNR and SSIM with border cropping and an optional luma-only comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::rgb_to_y;
use crate::tensor::Tensor;

/// Reported PSNR for identical images.
pub const PSNR_CAP: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Crops `crop` pixels from every border and optionally converts RGB to luma.
fn prepare(
    x: &Tensor,
    y: &Tensor,
    crop: usize,
    on_y: bool,
    what: &str,
) -> Result<(Tensor, Tensor)> {
    x.require_same_shape(y, what)?;
    let [b, c, h, w] = x.shape();
    if 2 * crop >= h || 2 * crop >= w {
        return Err(Error::shape(format!(
            "{what}: crop {crop} leaves nothing of a {h}x{w} image"
        )));
    }
    let cut = |t: &Tensor| {
        Tensor::from_fn([b, c, h - 2 * crop, w - 2 * crop], |bi, ci, yy, xx| {
            t.at(bi, ci, yy + crop, xx + crop)
        })
    };
    let (x, y) = (cut(x), cut(y));
    if on_y {
        Ok((rgb_to_y(&x)?, rgb_to_y(&y)?))
    } else {
        Ok((x, y))
    }
}

/// `10·log10(1 / MSE)` for images in [0, 1], or [`PSNR_CAP`] when they are identical.
pub fn psnr(x: &Tensor, y: &Tensor, crop: usize, on_y: bool) -> Result<f64> {
    let (x, y) = prepare(x, y, crop, on_y, "psnr")?;
    let mse = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - r;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = taps.iter().sum();
    taps.map(|t| t / s)
}

/// Valid-region separable Gaussian filtering of one plane.
fn blur(plane: &[f64], h: usize, w: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..k).map(|i| taps[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|i| taps[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize, taps: &[f64]) -> f64 {
    let prod =
        |f: &dyn Fn(f64, f64) -> f64| a.iter().zip(b).map(|(&p, &q)| f(p, q)).collect::<Vec<_>>();
    let (mu_a, oh, ow) = blur(a, h, w, taps);
    let (mu_b, ..) = blur(b, h, w, taps);
    let (aa, ..) = blur(&prod(&|p, _| p * p), h, w, taps);
    let (bb, ..) = blur(&prod(&|_, q| q * q), h, w, taps);
    let (ab, ..) = blur(&prod(&|p, q| p * q), h, w, taps);
    let mut total = 0.0;
    for i in 0..oh * ow {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let (va, vb, cov) = (aa[i] - ma * ma, bb[i] - mb * mb, ab[i] - ma * mb);
        total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    total / (oh * ow) as f64
}

/// Mean structural similarity over every valid 11×11 Gaussian-weighted window, averaged
/// over channels and batch items.
pub fn ssim(x: &Tensor, y: &Tensor, crop: usize, on_y: bool) -> Result<f64> {
    let (x, y) = prepare(x, y, crop, on_y, "ssim")?;
    let [b, c, h, w] = x.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::shape(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels after cropping, got {h}x{w}"
        )));
    }
    let taps = gaussian_taps();
    let planes = x.data().chunks(h * w).zip(y.data().chunks(h * w));
    let sum: f64 = planes.map(|(p, q)| ssim_plane(p, q, h, w, &taps)).sum();
    Ok(sum / (b * c) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

/// Per-image scores, their means and the protocol used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub crop: usize,
    pub on_y: bool,
    pub images: Vec<ImageMetrics>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
}

impl MetricReport {
    pub fn new(crop: usize, on_y: bool, images: Vec<ImageMetrics>) -> Self {
        let n = images.len().max(1) as f64;
        let mean_psnr = images.iter().map(|m| m.psnr).sum::<f64>() / n;
        let mean_ssim = images.iter().map(|m| m.ssim).sum::<f64>() / n;
        MetricReport {
            crop,
            on_y,
            images,
            mean_psnr,
            mean_ssim,
        }
    }

    /// Plain-text table with one row per image and a mean row.
    pub fn to_table(&self) -> String {
        let width = self
            .images
            .iter()
            .map(|m| m.name.len())
            .max()
            .unwrap_or(0)
            .max(5);
        let mut s = format!(
            "crop {} px, {}\n{:<width$}  {:>8}  {:>7}\n",
            self.crop,
            if self.on_y { "Y channel" } else { "RGB" },
            "image",
            "PSNR",
            "SSIM"
        );
        for m in &self.images {
            s += &format!("{:<width$}  {:>8.4}  {:>7.5}\n", m.name, m.psnr, m.ssim);
        }
        s += &format!(
            "{:<width$}  {:>8.4}  {:>7.5}\n",
            "mean", self.mean_psnr, self.mean_ssim
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random(shape: [usize; 4], seed: u64) -> Tensor {
        Tensor::random_uniform(shape, 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent SSIM: explicit 2-D Gaussian weights at every window position.
    fn ssim_oracle(x: &Tensor, y: &Tensor) -> f64 {
        let [b, c, h, w] = x.shape();
        let mut weights = [[0.0; 11]; 11];
        let mut total_w = 0.0;
        for (i, row) in weights.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (di, dj) = (i as f64 - 5.0, j as f64 - 5.0);
                *v = (-(di * di + dj * dj) / 4.5).exp();
                total_w += *v;
            }
        }
        let mut sum = 0.0;
        let mut count = 0.0;
        for bi in 0..b {
            for ci in 0..c {
                for y0 in 0..=h - 11 {
                    for x0 in 0..=w - 11 {
                        let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                        for i in 0..11 {
                            for j in 0..11 {
                                let wgt = weights[i][j] / total_w;
                                let p = x.at(bi, ci, y0 + i, x0 + j);
                                let q = y.at(bi, ci, y0 + i, x0 + j);
                                ma += wgt * p;
                                mb += wgt * q;
                                aa += wgt * p * p;
                                bb += wgt * q * q;
                                ab += wgt * p * q;
                            }
                        }
                        let (va, vb, cov) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
                        sum += ((2.0 * ma * mb + 1e-4) * (2.0 * cov + 9e-4))
                            / ((ma * ma + mb * mb + 1e-4) * (va + vb + 9e-4));
                        count += 1.0;
                    }
                }
            }
        }
        sum / count
    }

    #[test]
    fn psnr_fixed_points() {
        let x = random([1, 3, 12, 12], 1).scale(0.8);
        assert_eq!(psnr(&x, &x, 0, true).unwrap(), PSNR_CAP);
        let y = x.map(|v| v + 0.1);
        assert!((psnr(&x, &y, 0, false).unwrap() - 20.0).abs() < 1e-12);
        assert!((psnr(&x, &y, 2, false).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_matches_direct_mse_on_cropped_luma() {
        for seed in 0..5 {
            let x = random([1, 3, 16, 20], seed);
            let y = random([1, 3, 16, 20], seed + 50);
            let mut se = 0.0;
            for yy in 4..12 {
                for xx in 4..16 {
                    let luma = |t: &Tensor| {
                        (16.0
                            + 65.481 * t.at(0, 0, yy, xx)
                            + 128.553 * t.at(0, 1, yy, xx)
                            + 24.966 * t.at(0, 2, yy, xx))
                            / 255.0
                    };
                    se += (luma(&x) - luma(&y)).powi(2);
                }
            }
            let expected = 10.0 * (96.0 / se).log10();
            assert!((psnr(&x, &y, 4, true).unwrap() - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn ssim_fixed_points() {
        let x = random([1, 3, 16, 16], 3);
        assert_eq!(ssim(&x, &x, 0, false).unwrap(), 1.0);
        let a = Tensor::full([1, 1, 12, 12], 0.5);
        let b = Tensor::full([1, 1, 12, 12], 0.6);
        let expected = (2.0 * 0.3 + 1e-4) / (0.25 + 0.36 + 1e-4);
        assert!((ssim(&a, &b, 0, false).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.9836).abs() < 1e-4);
    }

    #[test]
    fn ssim_matches_window_oracle() {
        for seed in 0..3 {
            let x = random([1, 2, 14, 17], seed);
            let y = x
                .zip_map(&random([1, 2, 14, 17], seed + 9), |a, b| 0.7 * a + 0.3 * b)
                .unwrap();
            assert!((ssim(&x, &y, 0, false).unwrap() - ssim_oracle(&x, &y)).abs() < 1e-8);
        }
    }

    #[test]
    fn argument_errors() {
        let x = random([1, 3, 12, 12], 0);
        assert!(psnr(&x, &x, 6, false).is_err());
        assert!(ssim(&x, &x, 1, false).is_err());
        assert!(psnr(&x, &random([1, 3, 12, 13], 0), 0, false).is_err());
        assert!(psnr(
            &random([1, 2, 12, 12], 0),
            &random([1, 2, 12, 12], 0),
            0,
            true
        )
        .is_err());
    }

    #[test]
    fn psnr_falls_as_noise_grows() {
        let x = random([1, 3, 16, 16], 4).scale(0.5).map(|v| v + 0.25);
        let noise =
            Tensor::random_uniform([1, 3, 16, 16], -1.0, 1.0, &mut ChaCha8Rng::seed_from_u64(5));
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.02, 0.05, 0.1, 0.2] {
            let y = x.zip_map(&noise, |a, n| a + amp * n).unwrap();
            let p = psnr(&x, &y, 0, false).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn report_means_and_table() {
        let r = MetricReport::new(
            4,
            true,
            vec![
                ImageMetrics {
                    name: "a.png".into(),
                    psnr: 30.0,
                    ssim: 0.9,
                },
                ImageMetrics {
                    name: "b.png".into(),
                    psnr: 20.0,
                    ssim: 0.7,
                },
            ],
        );
        assert_eq!(r.mean_psnr, 25.0);
        assert!((r.mean_ssim - 0.8).abs() < 1e-15);
        let table = r.to_table();
        assert!(table.contains("a.png") && table.contains("mean") && table.contains("25.0000"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn symmetric(seed in 0u64..1000) {
            let x = random([1, 3, 13, 13], seed);
            let y = random([1, 3, 13, 13], seed + 1);
            prop_assert!((psnr(&x, &y, 1, true).unwrap() - psnr(&y, &x, 1, true).unwrap()).abs() < 1e-12);
            prop_assert!((ssim(&x, &y, 0, true).unwrap() - ssim(&y, &x, 0, true).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn ssim_ignores_joint_circular_shift_in_interior(seed in 0u64..1000, dy in 0usize..4, dx in 0usize..4) {
            let x = random([1, 1, 32, 32], seed);
            let y = random([1, 1, 32, 32], seed + 7);
            let (sx, sy) = (x.roll(dy as isize, dx as isize), y.roll(dy as isize, dx as isize));
            let window = |t: &Tensor, oy: usize, ox: usize| Tensor::from_fn([1, 1, 20, 20], |_, _, i, j| t.at(0, 0, oy + i, ox + j));
            let a = ssim(&window(&x, 6, 6), &window(&y, 6, 6), 0, false).unwrap();
            let b = ssim(&window(&sx, 6 + dy, 6 + dx), &window(&sy, 6 + dy, 6 + dx), 0, false).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
