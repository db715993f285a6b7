//! The `swtsr` command line. Exit codes: 0 success, 1 usage error, 2 I/O error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::RunConfig;
use super::data::{degrade, stripes};
use super::eval::{evaluate_dirs, write_report};
use super::io::{list_pngs, load_png, read_sidecar, save_png, write_sidecar, BitDepth};
use super::train::{compare_wavelet_loss, run_toy_train};
use crate::error::{Error, Result};
use crate::loss::{LossConfig, WaveletLoss};
use crate::model::{build_model, ModelConfig};
use crate::tensor::Tensor;
use crate::wavelet::{make_filter, swt_forward, swt_inverse};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "swtsr",
    version,
    about = "Wavelet-loss super-resolution toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Depth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

impl From<Depth> for BitDepth {
    fn from(d: Depth) -> Self {
        match d {
            Depth::Eight => BitDepth::Eight,
            Depth::Sixteen => BitDepth::Sixteen,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose a PNG into subband images plus a raw sidecar.
    Swt {
        input: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value = "sym19")]
        filter: String,
        #[arg(long, default_value_t = 1)]
        levels: usize,
    },
    /// Rebuild a PNG from a subband sidecar.
    Iswt {
        sidecar: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum, default_value = "8")]
        bit_depth: Depth,
    },
    /// Loss breakdown between a super-resolved image and its ground truth, as JSON.
    Loss {
        sr: PathBuf,
        hr: PathBuf,
        #[command(flatten)]
        loss: LossArgs,
        /// Also write the JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bicubic-downscale every PNG of a file or directory into `out_dir/lr`, with the
    /// matching cropped HR images in `out_dir/hr`.
    Degrade {
        input: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        scale: usize,
    },
    /// PSNR/SSIM of `sr_dir` against `gt_dir`, matched by file name.
    Eval {
        sr_dir: PathBuf,
        gt_dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        crop: usize,
        /// Score all RGB channels instead of luma.
        #[arg(long)]
        rgb: bool,
        /// Directory for report.json and report.txt (default: `sr_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a toy model from a JSON run config.
    Train { config: PathBuf },
    /// Parameter and mult-add counts for a model config.
    Count {
        /// Model config JSON; the toy defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// LR input height and width.
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
    },
    /// Write synthetic grating images.
    Stripes {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train one arm without and one with the wavelet loss on gratings and tabulate
    /// per-subband errors.
    Compare {
        config: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        weight: f64,
        #[arg(long, default_value_t = 4)]
        eval_count: usize,
    },
}

#[derive(Debug, Args)]
struct LossArgs {
    #[arg(long, default_value = "sym19")]
    filter: String,
    #[arg(long, default_value_t = 1)]
    levels: usize,
    /// Weight of every subband term.
    #[arg(long, default_value_t = 0.05)]
    weight: f64,
    /// LL and HH at 0.05, LH and HL at 0.01 (one level).
    #[arg(long, conflicts_with_all = ["levels", "weight"])]
    swinir: bool,
    /// Decompose every RGB channel instead of luma.
    #[arg(long)]
    rgb: bool,
    /// Loss config JSON; overrides the other loss flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl LossArgs {
    fn resolve(&self) -> Result<LossConfig> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            return Ok(serde_json::from_str(&text)?);
        }
        let mut cfg = if self.swinir {
            LossConfig {
                filter_name: self.filter.clone(),
                ..LossConfig::swinir_preset()
            }
        } else {
            LossConfig::uniform(&self.filter, self.levels, self.weight)
        };
        cfg.use_y_channel = !self.rgb;
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

/// `(1, c, h, w)` to `(c, 1, h, w)` and back.
fn channels_as_batch(image: &Tensor) -> Result<Tensor> {
    let [b, c, h, w] = image.shape();
    image.clone().reshape([b * c, 1, h, w])
}

fn min_max_scaled(t: &Tensor) -> (Tensor, f64, f64) {
    let lo = t.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = t.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    (t.map(|v| (v - lo) / span), lo, hi)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Swt {
            input,
            out_dir,
            filter,
            levels,
        } => {
            let bank = make_filter(&filter)?;
            let image = load_png(&input)?;
            let channels = image.channels();
            let pyramid = swt_forward(&channels_as_batch(&image)?, &bank, levels)?;
            create_dir(&out_dir)?;
            let mut bands = Vec::new();
            for (id, band) in pyramid.ids().iter().zip(&pyramid.subbands) {
                let [_, _, h, w] = band.shape();
                let (display, lo, hi) = min_max_scaled(&band.clone().reshape([1, channels, h, w])?);
                let name = format!("{id}.png");
                save_png(&display, &out_dir.join(&name), BitDepth::Eight)?;
                bands
                    .push(json!({ "subband": id.to_string(), "file": name, "min": lo, "max": hi }));
            }
            write_sidecar(&pyramid, &out_dir.join("subbands.swt"))?;
            let meta = json!({ "input": input, "filter": filter, "levels": levels, "channels": channels, "sidecar": "subbands.swt", "subbands": bands });
            write_json(&out_dir.join("swt.json"), &meta)?;
            println!(
                "{} subbands written to {}",
                pyramid.len(),
                out_dir.display()
            );
        }
        Command::Iswt {
            sidecar,
            output,
            bit_depth,
        } => {
            let pyramid = read_sidecar(&sidecar)?;
            let bank = make_filter(&pyramid.filter_name)?;
            let planes = swt_inverse(&pyramid, &bank)?;
            let [c, _, h, w] = planes.shape();
            save_png(&planes.reshape([1, c, h, w])?, &output, bit_depth.into())?;
            println!(
                "reconstructed {}x{} image written to {}",
                w,
                h,
                output.display()
            );
        }
        Command::Loss { sr, hr, loss, out } => {
            let loss = WaveletLoss::new(loss.resolve()?)?;
            let breakdown = loss.breakdown(&load_png(&sr)?, &load_png(&hr)?)?;
            let value = json!({ "config": loss.config(), "breakdown": breakdown });
            println!("{}", serde_json::to_string_pretty(&value)?);
            if let Some(path) = out {
                write_json(&path, &value)?;
            }
        }
        Command::Degrade {
            input,
            out_dir,
            scale,
        } => {
            let files = if input.is_dir() {
                list_pngs(&input)?
            } else {
                vec![input]
            };
            let (lr_dir, hr_dir) = (out_dir.join("lr"), out_dir.join("hr"));
            create_dir(&lr_dir)?;
            create_dir(&hr_dir)?;
            for path in &files {
                let name = path
                    .file_name()
                    .ok_or_else(|| Error::config(format!("{} is not a file", path.display())))?;
                let (lr, hr) = degrade(&load_png(path)?, scale)?;
                save_png(&lr, &lr_dir.join(name), BitDepth::Eight)?;
                save_png(&hr, &hr_dir.join(name), BitDepth::Eight)?;
            }
            println!(
                "{} image(s) degraded by {scale} into {}",
                files.len(),
                out_dir.display()
            );
        }
        Command::Eval {
            sr_dir,
            gt_dir,
            crop,
            rgb,
            out,
        } => {
            let report = evaluate_dirs(&sr_dir, &gt_dir, crop, !rgb)?;
            write_report(&report, out.as_deref().unwrap_or(&sr_dir))?;
            print!("{}", report.to_table());
        }
        Command::Train { config } => {
            let cfg = RunConfig::load(&config)?;
            let run = run_toy_train(&cfg)?;
            let first = run.losses.first().copied().unwrap_or(f64::NAN);
            let last = run.losses.last().copied().unwrap_or(f64::NAN);
            println!("{} steps, loss {first:.6} -> {last:.6}", run.losses.len());
            println!(
                "validation {}: PSNR {:.4} dB, SSIM {:.5}",
                run.validation.name, run.validation.psnr, run.validation.ssim
            );
            println!("outputs in {}", cfg.output_dir.display());
        }
        Command::Count {
            config,
            height,
            width,
        } => {
            let cfg: ModelConfig = match &config {
                Some(path) => serde_json::from_str(
                    &fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
                )?,
                None => ModelConfig::default(),
            };
            let model = build_model(&cfg, 0)?;
            let ma = model.count_mult_adds(height, width);
            let value = json!({
                "input": [height, width],
                "params": model.count_params(),
                "mult_adds": { "conv": ma.conv, "linear": ma.linear, "attention": ma.attention, "total": ma.total() },
            });
            println!("{}", serde_json::to_string_pretty(&value)?);
        }
        Command::Stripes {
            out_dir,
            count,
            size,
            seed,
        } => {
            create_dir(&out_dir)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..count {
                save_png(
                    &stripes(size, &mut rng),
                    &out_dir.join(format!("stripes{i:03}.png")),
                    BitDepth::Eight,
                )?;
            }
            println!("{count} grating(s) written to {}", out_dir.display());
        }
        Command::Compare {
            config,
            weight,
            eval_count,
        } => {
            let cfg = RunConfig::load(&config)?;
            let report = compare_wavelet_loss(&cfg, &[0.0, weight], eval_count)?;
            print!("{}", report.to_table());
        }
    }
    Ok(())
}
