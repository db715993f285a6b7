//! Overfits the toy model to one synthetic 16x16 -> 64x64 pair.
//!
//! `cargo run --release --example toy_train -- [steps] [output_dir]`

use swt_sr::harness::{run_toy_train, Dataset, RunConfig};

fn main() -> swt_sr::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps = args
        .next()
        .map_or(200, |s| s.parse().expect("steps must be an integer"));
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("swtsr-toy-train"), Into::into);
    let cfg = RunConfig::new(Dataset::Stripes { count: 1, size: 64 }, out, steps);
    let run = run_toy_train(&cfg)?;
    for (i, loss) in run
        .losses
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 20 == 0 || i + 1 == steps)
    {
        println!("step {:>4}  loss {loss:.5}", i + 1);
    }
    println!(
        "PSNR-Y {:.3} dB, SSIM {:.4}",
        run.validation.psnr, run.validation.ssim
    );
    println!("checkpoint {}", run.checkpoint.display());
    Ok(())
}
