//! Training objective: RGB l1 plus weighted l1 distances between wavelet subbands.
//!
//! All reductions are per-element means, so the weights carry over between patch sizes.
//! The subgradient of `|r|` at `r = 0` is taken as 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::wavelet::{self, subband_ids, FilterBank, SubbandPyramid};

/// BT.601 luma weights for inputs in [0, 1] and output in [16/255, 235/255].
pub const Y_OFFSET: f64 = 16.0 / 255.0;
pub const Y_WEIGHTS: [f64; 3] = [65.481 / 255.0, 128.553 / 255.0, 24.966 / 255.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    #[serde(rename = "filter")]
    pub filter_name: String,
    pub levels: usize,
    /// One weight per subband, in pyramid order (`LL_L`, then `LH, HL, HH` per level).
    pub lambda: Vec<f64>,
    /// Compare luma only; otherwise every RGB channel is decomposed separately.
    #[serde(rename = "use_y")]
    pub use_y_channel: bool,
}

impl Default for LossConfig {
    /// sym19, one level, every subband weighted 0.05, luma only.
    fn default() -> Self {
        LossConfig {
            filter_name: "sym19".into(),
            levels: 1,
            lambda: vec![0.05; 4],
            use_y_channel: true,
        }
    }
}

impl LossConfig {
    /// LL and HH weighted 0.05, LH and HL weighted 0.01, one level.
    pub fn swinir_preset() -> Self {
        LossConfig {
            lambda: vec![0.05, 0.01, 0.01, 0.05],
            ..Self::default()
        }
    }

    /// Same weight for every subband of a `levels`-deep pyramid.
    pub fn uniform(filter: &str, levels: usize, weight: f64) -> Self {
        LossConfig {
            filter_name: filter.into(),
            levels,
            lambda: vec![weight; 3 * levels + 1],
            use_y_channel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::config("loss levels must be at least 1"));
        }
        if self.lambda.len() != 3 * self.levels + 1 {
            return Err(Error::config(format!(
                "{} levels need {} subband weights, got {}",
                self.levels,
                3 * self.levels + 1,
                self.lambda.len()
            )));
        }
        if let Some(bad) = self.lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::config(format!(
                "subband weight {bad} must be finite and non-negative"
            )));
        }
        Ok(())
    }
}

/// Luma of an RGB image in [0, 1]; values are clipped to [0, 1] first.
pub fn rgb_to_y(image: &Tensor) -> Result<Tensor> {
    let [b, c, h, w] = image.shape();
    if c != 3 {
        return Err(Error::shape(format!(
            "rgb_to_y expects 3 channels, got {c}"
        )));
    }
    Ok(Tensor::from_fn([b, 1, h, w], |bi, _, y, x| {
        Y_OFFSET
            + (0..3)
                .map(|ch| Y_WEIGHTS[ch] * image.at(bi, ch, y, x).clamp(0.0, 1.0))
                .sum::<f64>()
    }))
}

/// Pulls a luma cotangent back to RGB. Clipped pixels receive no gradient.
pub fn rgb_to_y_adjoint(grad_y: &Tensor, image: &Tensor) -> Result<Tensor> {
    let [b, _, h, w] = image.shape();
    if grad_y.shape() != [b, 1, h, w] {
        return Err(Error::shape(format!(
            "luma cotangent {:?} does not match image {:?}",
            grad_y.shape(),
            image.shape()
        )));
    }
    Ok(Tensor::from_fn(image.shape(), |bi, ch, y, x| {
        let v = image.at(bi, ch, y, x);
        if (0.0..=1.0).contains(&v) {
            Y_WEIGHTS[ch] * grad_y.at(bi, 0, y, x)
        } else {
            0.0
        }
    }))
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean absolute difference over all elements.
pub fn l1_rgb(x: &Tensor, y: &Tensor) -> Result<f64> {
    x.require_same_shape(y, "l1_rgb")?;
    if x.is_empty() {
        return Ok(0.0);
    }
    Ok(x.data()
        .iter()
        .zip(y.data())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / x.len() as f64)
}

/// Per-subband contribution to the wavelet loss.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubbandTerm {
    pub subband: String,
    pub weight: f64,
    /// Mean absolute subband difference before weighting.
    pub mean_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub rgb: f64,
    pub subbands: Vec<SubbandTerm>,
    pub swt: f64,
    pub total: f64,
}

/// A validated [`LossConfig`] with its filter bank loaded.
#[derive(Debug, Clone)]
pub struct WaveletLoss {
    cfg: LossConfig,
    bank: FilterBank,
}

impl WaveletLoss {
    pub fn new(cfg: LossConfig) -> Result<Self> {
        cfg.validate()?;
        let bank = wavelet::make_filter(&cfg.filter_name)?;
        Ok(WaveletLoss { cfg, bank })
    }

    pub fn config(&self) -> &LossConfig {
        &self.cfg
    }

    pub fn filter(&self) -> &FilterBank {
        &self.bank
    }

    /// Planes the wavelet loss compares: luma, or each channel as its own image.
    fn planes(&self, image: &Tensor) -> Result<Tensor> {
        if self.cfg.use_y_channel {
            rgb_to_y(image)
        } else {
            let [b, c, h, w] = image.shape();
            image.clone().reshape([b * c, 1, h, w])
        }
    }

    /// Subband decomposition of the compared planes of `x - y`.
    fn residual_pyramid(&self, x: &Tensor, y: &Tensor) -> Result<SubbandPyramid> {
        x.require_same_shape(y, "swt_loss")?;
        let residual = self.planes(x)?.sub(&self.planes(y)?)?;
        wavelet::swt_forward(&residual, &self.bank, self.cfg.levels)
    }

    pub fn breakdown(&self, x: &Tensor, y: &Tensor) -> Result<LossBreakdown> {
        let rgb = l1_rgb(x, y)?;
        let pyramid = self.residual_pyramid(x, y)?;
        let subbands: Vec<SubbandTerm> = subband_ids(self.cfg.levels)
            .iter()
            .zip(&pyramid.subbands)
            .zip(&self.cfg.lambda)
            .map(|((id, band), &weight)| SubbandTerm {
                subband: id.to_string(),
                weight,
                mean_abs: band.data().iter().map(|v| v.abs()).sum::<f64>() / band.len() as f64,
            })
            .collect();
        let swt = subbands.iter().map(|t| t.weight * t.mean_abs).sum();
        Ok(LossBreakdown {
            rgb,
            subbands,
            swt,
            total: rgb + swt,
        })
    }

    pub fn swt_loss(&self, x: &Tensor, y: &Tensor) -> Result<f64> {
        let pyramid = self.residual_pyramid(x, y)?;
        Ok(pyramid
            .subbands
            .iter()
            .zip(&self.cfg.lambda)
            .map(|(band, l)| {
                l * band.data().iter().map(|v| v.abs()).sum::<f64>() / band.len() as f64
            })
            .sum())
    }

    pub fn total_loss(&self, x: &Tensor, y: &Tensor) -> Result<f64> {
        Ok(l1_rgb(x, y)? + self.swt_loss(x, y)?)
    }

    /// Loss value and its subgradient with respect to `x`.
    pub fn value_and_grad(&self, x: &Tensor, y: &Tensor) -> Result<(f64, Tensor)> {
        x.require_same_shape(y, "total_loss_grad")?;
        let n = x.len() as f64;
        let mut grad = x.zip_map(y, |a, b| sign(a - b) / n)?;
        let mut value = l1_rgb(x, y)?;

        let mut pyramid = self.residual_pyramid(x, y)?;
        for (band, &l) in pyramid.subbands.iter_mut().zip(&self.cfg.lambda) {
            let nj = band.len() as f64;
            value += l * band.data().iter().map(|v| v.abs()).sum::<f64>() / nj;
            *band = band.map(|r| l * sign(r) / nj);
        }
        let plane_grad = wavelet::swt_adjoint(&pyramid, &self.bank)?;
        let swt_grad = if self.cfg.use_y_channel {
            rgb_to_y_adjoint(&plane_grad, x)?
        } else {
            plane_grad.reshape(x.shape())?
        };
        grad.add_assign(&swt_grad)?;
        Ok((value, grad))
    }

    pub fn total_loss_grad(&self, x: &Tensor, y: &Tensor) -> Result<Tensor> {
        Ok(self.value_and_grad(x, y)?.1)
    }
}

/// Weighted subband l1 between `x` and `y`, see [`WaveletLoss::swt_loss`].
pub fn swt_loss(x: &Tensor, y: &Tensor, cfg: &LossConfig) -> Result<f64> {
    WaveletLoss::new(cfg.clone())?.swt_loss(x, y)
}

/// `l1_rgb(x, y) + swt_loss(x, y, cfg)`.
pub fn total_loss(x: &Tensor, y: &Tensor, cfg: &LossConfig) -> Result<f64> {
    WaveletLoss::new(cfg.clone())?.total_loss(x, y)
}

pub fn total_loss_grad(x: &Tensor, y: &Tensor, cfg: &LossConfig) -> Result<Tensor> {
    WaveletLoss::new(cfg.clone())?.total_loss_grad(x, y)
}
