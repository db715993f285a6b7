//! Scoring a directory of super-resolved images against ground truth.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::io::{list_pngs, load_png};
use crate::error::{Error, Result};
use crate::metrics::{psnr, ssim, ImageMetrics, MetricReport};

fn file_names(dir: &Path) -> Result<BTreeSet<String>> {
    Ok(list_pngs(dir)?
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect())
}

/// Pairs images by file name and scores each pair. Every PNG in either directory needs
/// a counterpart in the other.
pub fn evaluate_dirs(
    sr_dir: &Path,
    gt_dir: &Path,
    crop: usize,
    on_y: bool,
) -> Result<MetricReport> {
    let sr = file_names(sr_dir)?;
    let gt = file_names(gt_dir)?;
    if let Some(name) = sr.symmetric_difference(&gt).next() {
        let (present, missing) = if sr.contains(name) {
            (sr_dir, gt_dir)
        } else {
            (gt_dir, sr_dir)
        };
        return Err(Error::MissingPair(format!(
            "{} has no counterpart in {}",
            present.join(name).display(),
            missing.display()
        )));
    }
    if sr.is_empty() {
        return Err(Error::MissingPair(format!(
            "no PNG images in {}",
            gt_dir.display()
        )));
    }
    let mut images = Vec::with_capacity(sr.len());
    for name in &sr {
        let x = load_png(&sr_dir.join(name))?;
        let y = load_png(&gt_dir.join(name))?;
        let scored = psnr(&x, &y, crop, on_y).and_then(|p| Ok((p, ssim(&x, &y, crop, on_y)?)));
        let (p, s) = scored.map_err(|e| match e {
            Error::Shape(m) => Error::Shape(format!("{name}: {m}")),
            other => other,
        })?;
        images.push(ImageMetrics {
            name: name.clone(),
            psnr: p,
            ssim: s,
        });
    }
    Ok(MetricReport::new(crop, on_y, images))
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn write_report(report: &MetricReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join("report.json");
    fs::write(&json, serde_json::to_string_pretty(report)?).map_err(|e| Error::io(&json, e))?;
    let txt = dir.join("report.txt");
    fs::write(&txt, report.to_table()).map_err(|e| Error::io(&txt, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::io::{save_png, BitDepth};
    use crate::metrics::{PSNR_CAP, SSIM_C1};
    use crate::tensor::Tensor;

    fn constant(dir: &Path, name: &str, level: u8) {
        save_png(
            &Tensor::full([1, 3, 16, 16], level as f64 / 255.0),
            &dir.join(name),
            BitDepth::Eight,
        )
        .unwrap();
    }

    #[test]
    fn same_directory_scores_perfectly() {
        let dir = tempfile::tempdir().unwrap();
        constant(dir.path(), "a.png", 40);
        constant(dir.path(), "b.png", 90);
        let r = evaluate_dirs(dir.path(), dir.path(), 2, true).unwrap();
        assert_eq!(r.images.len(), 2);
        assert!(r.images.iter().all(|m| m.psnr == PSNR_CAP && m.ssim == 1.0));
    }

    #[test]
    fn mismatched_name_is_reported() {
        let (sr, gt) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        constant(sr.path(), "a.png", 1);
        constant(gt.path(), "a.png", 1);
        constant(gt.path(), "zebra.png", 1);
        let err = evaluate_dirs(sr.path(), gt.path(), 0, false).unwrap_err();
        assert!(matches!(err, Error::MissingPair(_)));
        assert!(err.to_string().contains("zebra.png"));
    }

    #[test]
    fn planted_offsets_match_closed_form() {
        let (sr, gt) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let offsets = [25u8, 12, 5];
        let mut expected_psnr = 0.0;
        let mut expected_ssim = 0.0;
        for (i, &d) in offsets.iter().enumerate() {
            let name = format!("img{i}.png");
            constant(gt.path(), &name, 100);
            constant(sr.path(), &name, 100 + d);
            expected_psnr += 20.0 * (255.0 / d as f64).log10();
            let (a, b) = (100.0 / 255.0, (100 + d) as f64 / 255.0);
            expected_ssim += (2.0 * a * b + SSIM_C1) / (a * a + b * b + SSIM_C1);
        }
        let r = evaluate_dirs(sr.path(), gt.path(), 0, false).unwrap();
        assert!((r.mean_psnr - expected_psnr / 3.0).abs() < 1e-10);
        assert!((r.mean_ssim - expected_ssim / 3.0).abs() < 1e-12);

        let out = tempfile::tempdir().unwrap();
        write_report(&r, out.path()).unwrap();
        let back: MetricReport =
            serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(back, r);
        assert!(fs::read_to_string(out.path().join("report.txt"))
            .unwrap()
            .contains("img2.png"));
    }
}
