//! Parameter and mult-add counts as non-local sparse attention blocks are added around
//! the body.

use swt_sr::model::{build_model, ModelConfig};

fn main() -> swt_sr::Result<()> {
    println!(
        "{:<8} {:>8} {:>14} {:>14} {:>14}",
        "NLSA", "params", "conv", "linear", "attention"
    );
    for extra in [0, 2, 4, 8] {
        let cfg = ModelConfig {
            n_pre_nlsa: extra / 2,
            n_post_nlsa: extra / 2,
            ..Default::default()
        };
        let model = build_model(&cfg, 0)?;
        let ma = model.count_mult_adds(64, 64);
        println!(
            "+{extra:<7} {:>8} {:>14} {:>14} {:>14}",
            model.count_params(),
            ma.conv,
            ma.linear,
            ma.attention
        );
    }
    Ok(())
}
