//! JSON run configuration for training and comparison runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossConfig;
use crate::model::{ModelConfig, OptimizerConfig};

/// Where HR training images come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Dataset {
    /// PNGs in `hr_dir`. LR inputs are read from `lr_dir` under the same file names, or
    /// made by bicubic degradation when `lr_dir` is absent.
    Dir {
        hr_dir: PathBuf,
        #[serde(default)]
        lr_dir: Option<PathBuf>,
    },
    /// `count` seeded sinusoid gratings of `size × size` HR pixels.
    Stripes { count: usize, size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFlags {
    /// Border pixels ignored by PSNR/SSIM; defaults to the model scale.
    #[serde(default)]
    pub crop: Option<usize>,
    #[serde(default = "yes")]
    pub on_y: bool,
}

impl Default for MetricFlags {
    fn default() -> Self {
        MetricFlags {
            crop: None,
            on_y: true,
        }
    }
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Dataset,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub seed: u64,
    pub steps: usize,
    #[serde(default = "one")]
    pub batch_size: usize,
    /// Side of the random LR crops; whole images are used when absent.
    #[serde(default)]
    pub patch_size: Option<usize>,
    /// Random flips and transposes of every sample.
    #[serde(default)]
    pub augment: bool,
    /// HR image super-resolved after training; defaults to the first training image.
    #[serde(default)]
    pub validation: Option<PathBuf>,
    #[serde(default)]
    pub metrics: MetricFlags,
}

impl RunConfig {
    /// A config with every optional key at its default.
    pub fn new(dataset: Dataset, output_dir: impl Into<PathBuf>, steps: usize) -> Self {
        RunConfig {
            dataset,
            output_dir: output_dir.into(),
            model: ModelConfig::default(),
            loss: LossConfig::default(),
            optimizer: OptimizerConfig::default(),
            seed: 0,
            steps,
            batch_size: 1,
            patch_size: None,
            augment: false,
            validation: None,
            metrics: MetricFlags::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.loss.validate()?;
        self.optimizer.validate()?;
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if let Some(p) = self.patch_size {
            if p == 0 || p % self.model.window != 0 {
                return Err(Error::config(format!(
                    "patch_size {p} must be a positive multiple of the window {}",
                    self.model.window
                )));
            }
        }
        if let Dataset::Stripes { size, .. } = self.dataset {
            let unit = self.model.scale * self.model.window;
            if size < unit {
                return Err(Error::config(format!(
                    "stripe size {size} is smaller than scale x window = {unit}"
                )));
            }
        }
        Ok(())
    }

    pub fn crop(&self) -> usize {
        self.metrics.crop.unwrap_or(self.model.scale)
    }

    /// Writes the fully resolved config to `output_dir/config.json`.
    pub fn echo(&self) -> Result<PathBuf> {
        fs::create_dir_all(&self.output_dir).map_err(|e| Error::io(&self.output_dir, e))?;
        let path = self.output_dir.join("config.json");
        fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_fills_defaults() {
        let cfg = RunConfig::from_json(r#"{"dataset": {"kind": "stripes", "count": 2, "size": 64}, "output_dir": "out", "steps": 3}"#).unwrap();
        assert_eq!(
            cfg,
            RunConfig::new(Dataset::Stripes { count: 2, size: 64 }, "out", 3)
        );
        assert_eq!(cfg.crop(), 4);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"dataset": {"kind": "stripes", "count": 2, "size": 64}, "output_dir": "o", "steps": 1, "stpes": 2}"#,
            r#"{"dataset": {"kind": "stripes", "count": 2, "size": 64, "angle": 1}, "output_dir": "o", "steps": 1}"#,
            r#"{"dataset": {"kind": "dir", "hr_dir": "x"}, "output_dir": "o", "steps": 1, "model": {"depth": 3}}"#,
            r#"{"dataset": {"kind": "dir", "hr_dir": "x"}, "output_dir": "o", "steps": 1, "metrics": {"on_y": true, "x": 0}}"#,
        ] {
            assert!(
                matches!(RunConfig::from_json(text), Err(Error::Json(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        let base = RunConfig::new(Dataset::Stripes { count: 1, size: 64 }, "o", 1);
        assert!(RunConfig {
            patch_size: Some(6),
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            batch_size: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            dataset: Dataset::Stripes { count: 1, size: 8 },
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(base.validate().is_ok());
    }

    #[test]
    fn echo_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::new(
            Dataset::Dir {
                hr_dir: "hr".into(),
                lr_dir: None,
            },
            dir.path().join("run"),
            5,
        );
        cfg.seed = 11;
        let path = cfg.echo().unwrap();
        assert_eq!(RunConfig::load(&path).unwrap(), cfg);
    }
}
