//! Scores bicubic upscaling of degraded gratings with the benchmark protocol: images
//! matched by name, borders cropped by the scale, PSNR and SSIM on luma.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swt_sr::harness::{
    bicubic_resize, degrade, evaluate_dirs, save_png, stripes, write_report, BitDepth, Direction,
};

fn main() -> swt_sr::Result<()> {
    let root = std::env::temp_dir().join("swtsr-evaluate");
    let (sr_dir, gt_dir) = (root.join("sr"), root.join("gt"));
    for d in [&sr_dir, &gt_dir] {
        std::fs::create_dir_all(d).map_err(|e| swt_sr::Error::Io {
            path: d.clone(),
            source: e,
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..3 {
        let (lr, hr) = degrade(&stripes(48, &mut rng), 4)?;
        let sr = bicubic_resize(&lr, 4.0, Direction::Up)?;
        let name = format!("img{i}.png");
        save_png(&hr, &gt_dir.join(&name), BitDepth::Eight)?;
        save_png(&sr, &sr_dir.join(&name), BitDepth::Eight)?;
    }
    let report = evaluate_dirs(&sr_dir, &gt_dir, 4, true)?;
    write_report(&report, &root)?;
    print!("{}", report.to_table());
    println!("report.json and report.txt in {}", root.display());
    Ok(())
}
