//! Runs window self-attention (plain and shifted), overlapping cross-attention and
//! channel attention on one random feature map.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swt_sr::attention::{
    channel_attention, overlap_window_size, overlapping_cross_attention, relative_bias_len,
    window_msa, AttentionConfig, AttentionWeights, ChannelAttentionWeights,
};
use swt_sr::Tensor;

fn main() -> swt_sr::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Tensor::random_uniform([1, 16, 8, 8], -1.0, 1.0, &mut rng);
    let cfg = AttentionConfig {
        dim: 16,
        heads: 2,
        window: 4,
        ..Default::default()
    };
    let key_window = overlap_window_size(cfg.window, cfg.overlap_ratio);

    let self_weights = AttentionWeights::random(16, 2, relative_bias_len(4, 4), &mut rng);
    let cross_weights = AttentionWeights::random(16, 2, relative_bias_len(4, key_window), &mut rng);
    let plain = window_msa(&x, &cfg, &self_weights)?;
    let shifted = window_msa(
        &x,
        &AttentionConfig {
            shift: 2,
            ..cfg.clone()
        },
        &self_weights,
    )?;
    let cross = overlapping_cross_attention(&x, &cfg, &cross_weights)?;
    let channel = channel_attention(&x, &ChannelAttentionWeights::random(16, 4, &mut rng)?)?;

    println!("queries in 4x4 windows, keys in {key_window}x{key_window} windows");
    for (name, y) in [
        ("window", &plain),
        ("shifted window", &shifted),
        ("overlapping cross", &cross),
        ("channel", &channel),
    ] {
        println!(
            "{name:<18} {:?}  mean |y| {:.4}",
            y.shape(),
            y.data().iter().map(|v| v.abs()).sum::<f64>() / y.len() as f64
        );
    }
    // Shifting the input by the window shift and undoing it afterwards is the shifted variant.
    let rolled = window_msa(&x.roll(-2, -2), &cfg, &self_weights)?.roll(2, 2);
    println!(
        "shift == conjugated roll: {:.2e}",
        rolled.max_abs_diff(&shifted)?
    );
    Ok(())
}
