//! Trains two toy models on gratings, one without and one with subband terms, and
//! tabulates their per-subband luma errors on held-out gratings.
//!
//! `cargo run --release --example stripes_comparison -- [steps]`

use swt_sr::harness::{compare_wavelet_loss, Dataset, RunConfig};

fn main() -> swt_sr::Result<()> {
    let steps = std::env::args()
        .nth(1)
        .map_or(200, |s| s.parse().expect("steps must be an integer"));
    let out = std::env::temp_dir().join("swtsr-stripes-comparison");
    let mut cfg = RunConfig::new(Dataset::Stripes { count: 8, size: 64 }, &out, steps);
    cfg.augment = true;
    cfg.seed = 5;
    let report = compare_wavelet_loss(&cfg, &[0.0, 0.05], 4)?;
    print!("{}", report.to_table());
    println!("runs and comparison.json in {}", out.display());
    Ok(())
}
