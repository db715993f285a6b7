//! Builds an LR/HR pair with bicubic downscaling and measures how much a plain bicubic
//! upscale recovers at x2 and x4.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swt_sr::harness::{bicubic_resize, degrade, stripes, Direction};
use swt_sr::metrics::{psnr, ssim};

fn main() -> swt_sr::Result<()> {
    let image = stripes(66, &mut ChaCha8Rng::seed_from_u64(5));
    for scale in [2, 4] {
        let (lr, hr) = degrade(&image, scale)?;
        let up = bicubic_resize(&lr, scale as f64, Direction::Up)?.clamp(0.0, 1.0);
        println!(
            "x{scale}: HR {:?} -> LR {:?}; bicubic back up PSNR-Y {:.2} dB, SSIM {:.4}",
            &hr.shape()[2..],
            &lr.shape()[2..],
            psnr(&up, &hr, scale, true)?,
            ssim(&up, &hr, scale, true)?
        );
    }
    Ok(())
}
