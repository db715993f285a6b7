//! Decomposes a synthetic grating with a two-level stationary wavelet transform, prints
//! the energy in each subband and checks the reconstruction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swt_sr::harness::stripes;
use swt_sr::loss::rgb_to_y;
use swt_sr::wavelet::{make_filter, swt_forward, swt_inverse};

fn main() -> swt_sr::Result<()> {
    let image = stripes(64, &mut ChaCha8Rng::seed_from_u64(2));
    let luma = rgb_to_y(&image)?;
    for filter in ["haar", "sym4", "sym19"] {
        let bank = make_filter(filter)?;
        let pyramid = swt_forward(&luma, &bank, 2)?;
        println!("{filter} ({} taps)", bank.len());
        for (id, band) in pyramid.ids().iter().zip(&pyramid.subbands) {
            println!(
                "  {id:<4} mean square {:>10.6}",
                band.norm_sq() / band.len() as f64
            );
        }
        let err = swt_inverse(&pyramid, &bank)?.max_abs_diff(&luma)?;
        println!("  reconstruction error {err:.2e}");
    }
    Ok(())
}
