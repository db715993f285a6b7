//! Compares the loss breakdown of a blurry and a noisy reconstruction of the same image
//! under the default and the LL/HH-weighted presets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swt_sr::harness::{bicubic_resize, stripes, Direction};
use swt_sr::loss::{LossConfig, WaveletLoss};
use swt_sr::Tensor;

fn main() -> swt_sr::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let hr = stripes(64, &mut rng);
    let small = bicubic_resize(&hr, 4.0, Direction::Down)?;
    let blurry = bicubic_resize(&small, 4.0, Direction::Up)?.clamp(0.0, 1.0);
    let noise = Tensor::random_uniform(hr.shape(), -0.08, 0.08, &mut rng);
    let noisy = hr.add(&noise)?.clamp(0.0, 1.0);

    for (preset, cfg) in [
        ("default", LossConfig::default()),
        ("swinir", LossConfig::swinir_preset()),
    ] {
        let loss = WaveletLoss::new(cfg)?;
        println!("{preset} preset");
        for (name, sr) in [("blurry", &blurry), ("noisy", &noisy)] {
            let b = loss.breakdown(sr, &hr)?;
            let bands: Vec<String> = b
                .subbands
                .iter()
                .map(|t| format!("{} {:.4}", t.subband, t.mean_abs))
                .collect();
            println!(
                "  {name:<6} rgb {:.4}  swt {:.5}  total {:.4}  [{}]",
                b.rgb,
                b.swt,
                b.total,
                bands.join(", ")
            );
        }
    }
    Ok(())
}
