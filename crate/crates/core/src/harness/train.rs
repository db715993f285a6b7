//! Desk-scale training runs and the wavelet-loss comparison on synthetic gratings.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Dataset, RunConfig};
use super::data::{augment, crop_to_multiple, degrade, random_crop, stripes};
use super::io::{list_pngs, load_png, save_png, BitDepth};
use crate::error::{Error, Result};
use crate::loss::{LossConfig, WaveletLoss};
use crate::metrics::{psnr, ssim, ImageMetrics};
use crate::model::{build_model, save_checkpoint, train_step, Model, OptimizerState};
use crate::tensor::Tensor;

/// A training sample: LR input and the matching HR target.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub name: String,
    pub lr: Tensor,
    pub hr: Tensor,
}

/// Crops `lr` to a multiple of `window` and `hr` to the matching region.
fn fit_pair(name: String, lr: Tensor, hr: Tensor, window: usize, scale: usize) -> Result<Pair> {
    let lr = crop_to_multiple(&lr, window)?;
    let [_, c, h, w] = lr.shape();
    let [_, hc, hh, hw] = hr.shape();
    if hc != c || hh < h * scale || hw < w * scale {
        return Err(Error::shape(format!(
            "{name}: HR {hh}x{hw} does not cover LR {h}x{w} at scale {scale}"
        )));
    }
    let hr = Tensor::from_fn([1, c, h * scale, w * scale], |_, ci, y, x| {
        hr.at(0, ci, y, x)
    });
    Ok(Pair { name, lr, hr })
}

fn degraded_pair(name: String, hr: &Tensor, window: usize, scale: usize) -> Result<Pair> {
    let (lr, hr) = degrade(hr, scale)?;
    fit_pair(name, lr, hr, window, scale)
}

/// `count` degraded gratings drawn from a generator seeded with `seed`.
pub fn stripe_pairs(
    count: usize,
    size: usize,
    seed: u64,
    window: usize,
    scale: usize,
) -> Result<Vec<Pair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            degraded_pair(
                format!("stripes{i:03}.png"),
                &stripes(size, &mut rng),
                window,
                scale,
            )
        })
        .collect()
}

/// Loads or generates the training pairs named by `cfg.dataset`.
pub fn load_dataset(cfg: &RunConfig) -> Result<Vec<Pair>> {
    let (window, scale) = (cfg.model.window, cfg.model.scale);
    let pairs = match &cfg.dataset {
        Dataset::Stripes { count, size } => {
            stripe_pairs(*count, *size, cfg.seed.wrapping_add(1), window, scale)?
        }
        Dataset::Dir { hr_dir, lr_dir } => {
            let mut pairs = Vec::new();
            for path in list_pngs(hr_dir)? {
                let name = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let hr = load_png(&path)?;
                if hr.channels() != 3 {
                    return Err(Error::Image {
                        path,
                        message: "training images must be RGB".into(),
                    });
                }
                pairs.push(match lr_dir {
                    Some(dir) => {
                        let lr_path = dir.join(&name);
                        if !lr_path.is_file() {
                            return Err(Error::MissingPair(format!(
                                "{} has no LR image in {}",
                                name,
                                dir.display()
                            )));
                        }
                        fit_pair(name, load_png(&lr_path)?, hr, window, scale)?
                    }
                    None => degraded_pair(name, &hr, window, scale)?,
                });
            }
            pairs
        }
    };
    if pairs.is_empty() {
        return Err(Error::config("the training dataset is empty"));
    }
    Ok(pairs)
}

fn sample_batch<R: Rng>(pairs: &[Pair], cfg: &RunConfig, rng: &mut R) -> Result<(Tensor, Tensor)> {
    let mut lrs = Vec::with_capacity(cfg.batch_size);
    let mut hrs = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.batch_size {
        let pair = &pairs[rng.gen_range(0..pairs.len())];
        let (mut lr, mut hr) = match cfg.patch_size {
            Some(p) => random_crop(&pair.lr, &pair.hr, p, cfg.model.scale, rng)?,
            None => (pair.lr.clone(), pair.hr.clone()),
        };
        if cfg.augment {
            let mode = rng.gen_range(0..8);
            lr = augment(&lr, mode);
            hr = augment(&hr, mode);
        }
        lrs.push(lr);
        hrs.push(hr);
    }
    Ok((Tensor::stack_batch(&lrs)?, Tensor::stack_batch(&hrs)?))
}

/// What a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    /// Loss before each update, one per step.
    pub losses: Vec<f64>,
    pub model: Model,
    pub validation: ImageMetrics,
    pub checkpoint: PathBuf,
    pub loss_log: PathBuf,
    pub sr_image: PathBuf,
}

fn write_file(path: PathBuf, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Trains from scratch and writes `config.json`, `loss.csv` (`step,loss,lr`),
/// `model.ckpt`, `sr.png` and `validation.json` into `cfg.output_dir`.
pub fn run_toy_train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let pairs = load_dataset(cfg)?;
    let validation = match &cfg.validation {
        Some(path) => degraded_pair(
            "validation".into(),
            &load_png(path)?,
            cfg.model.window,
            cfg.model.scale,
        )?,
        None => pairs[0].clone(),
    };
    cfg.echo()?;

    let mut model = build_model(&cfg.model, cfg.seed)?;
    let mut opt = OptimizerState::new(&model, cfg.optimizer.clone())?;
    let loss = WaveletLoss::new(cfg.loss.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(2));
    let mut log = String::from("step,loss,lr\n");
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let (lr, hr) = sample_batch(&pairs, cfg, &mut rng)?;
        let value = train_step(&mut model, &lr, &hr, &mut opt, &loss)?;
        writeln!(log, "{step},{value:.17e},{:e}", cfg.optimizer.lr_at(step))
            .expect("writing to a String");
        losses.push(value);
    }

    let dir = &cfg.output_dir;
    let loss_log = write_file(dir.join("loss.csv"), log)?;
    let checkpoint = dir.join("model.ckpt");
    save_checkpoint(&model, &checkpoint)?;
    let sr = model.forward(&validation.lr)?;
    let sr_image = dir.join("sr.png");
    save_png(&sr, &sr_image, BitDepth::Eight)?;
    let clipped = sr.clamp(0.0, 1.0);
    let (crop, on_y) = (cfg.crop(), cfg.metrics.on_y);
    let metrics = ImageMetrics {
        name: validation.name.clone(),
        psnr: psnr(&clipped, &validation.hr, crop, on_y)?,
        ssim: ssim(&clipped, &validation.hr, crop, on_y)?,
    };
    write_file(
        dir.join("validation.json"),
        serde_json::to_string_pretty(&metrics)?,
    )?;
    Ok(TrainSummary {
        losses,
        model,
        validation: metrics,
        checkpoint,
        loss_log,
        sr_image,
    })
}

/// Per-subband luma errors of one trained arm, averaged over the held-out gratings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub weight: f64,
    pub final_train_loss: f64,
    /// `(subband, mean |SWT(Y(sr) - Y(hr))|)` in pyramid order.
    pub subband_errors: Vec<(String, f64)>,
    pub psnr_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossComparison {
    pub steps: usize,
    pub filter: String,
    pub levels: usize,
    pub eval_images: usize,
    pub arms: Vec<ArmReport>,
}

impl LossComparison {
    pub fn to_table(&self) -> String {
        let header: Vec<String> = self
            .arms
            .iter()
            .map(|a| format!("lambda={}", a.weight))
            .collect();
        let mut s = format!(
            "{} steps, {} level(s) of {}, Y channel, {} held-out gratings\n{:<10}",
            self.steps, self.levels, self.filter, self.eval_images, "subband"
        );
        for h in &header {
            s += &format!("  {h:>12}");
        }
        s.push('\n');
        let rows = self.arms.first().map_or(0, |a| a.subband_errors.len());
        for r in 0..rows {
            s += &format!("{:<10}", self.arms[0].subband_errors[r].0);
            for a in &self.arms {
                s += &format!("  {:>12.6}", a.subband_errors[r].1);
            }
            s.push('\n');
        }
        s += &format!("{:<10}", "PSNR-Y");
        for a in &self.arms {
            s += &format!("  {:>12.4}", a.psnr_y);
        }
        s.push('\n');
        s
    }
}

/// Trains one arm per subband weight in `weights` (same seed, data and steps) and
/// scores each on `eval_count` held-out gratings. Arms are written to
/// `output_dir/lambda_<w>`; the table goes to `comparison.txt` and `comparison.json`.
pub fn compare_wavelet_loss(
    base: &RunConfig,
    weights: &[f64],
    eval_count: usize,
) -> Result<LossComparison> {
    let Dataset::Stripes { size, .. } = base.dataset else {
        return Err(Error::config(
            "the loss comparison runs on the stripes dataset",
        ));
    };
    if eval_count == 0 {
        return Err(Error::config(
            "the loss comparison needs at least one evaluation image",
        ));
    }
    let (window, scale) = (base.model.window, base.model.scale);
    let held_out = stripe_pairs(
        eval_count,
        size,
        base.seed.wrapping_add(0x5EED),
        window,
        scale,
    )?;
    let probe = WaveletLoss::new(LossConfig {
        lambda: vec![0.0; 3 * base.loss.levels + 1],
        use_y_channel: true,
        ..base.loss.clone()
    })?;
    let crop = base.crop();

    let mut arms = Vec::with_capacity(weights.len());
    for &weight in weights {
        let mut cfg = base.clone();
        cfg.loss.lambda = vec![weight; 3 * cfg.loss.levels + 1];
        cfg.output_dir = base.output_dir.join(format!("lambda_{weight}"));
        let run = run_toy_train(&cfg)?;
        let mut errors: Vec<(String, f64)> = Vec::new();
        let mut psnr_y = 0.0;
        for pair in &held_out {
            let sr = run.model.forward(&pair.lr)?.clamp(0.0, 1.0);
            let terms = probe.breakdown(&sr, &pair.hr)?.subbands;
            if errors.is_empty() {
                errors = terms.iter().map(|t| (t.subband.clone(), 0.0)).collect();
            }
            for (acc, t) in errors.iter_mut().zip(&terms) {
                acc.1 += t.mean_abs / eval_count as f64;
            }
            psnr_y += psnr(&sr, &pair.hr, crop, true)? / eval_count as f64;
        }
        arms.push(ArmReport {
            weight,
            final_train_loss: run.losses.last().copied().unwrap_or(f64::NAN),
            subband_errors: errors,
            psnr_y,
        });
    }
    let report = LossComparison {
        steps: base.steps,
        filter: base.loss.filter_name.clone(),
        levels: base.loss.levels,
        eval_images: eval_count,
        arms,
    };
    fs::create_dir_all(&base.output_dir).map_err(|e| Error::io(&base.output_dir, e))?;
    write_file(
        base.output_dir.join("comparison.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    write_file(base.output_dir.join("comparison.txt"), report.to_table())?;
    Ok(report)
}
