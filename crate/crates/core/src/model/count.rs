use serde::Serialize;

use super::Model;
use crate::attention::bucket_count;

/// Multiply-accumulate tally of one forward pass on a single image, split by block kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MultAdds {
    pub conv: u64,
    pub linear: u64,
    pub attention: u64,
}

impl MultAdds {
    pub fn total(&self) -> u64 {
        self.conv + self.linear + self.attention
    }
}

fn conv(out_c: usize, in_c: usize, k: usize, pixels: usize) -> u64 {
    (out_c * in_c * k * k * pixels) as u64
}

impl Model {
    /// Counts multiply-accumulates for one `input_h × input_w` image.
    ///
    /// Convolutions cost `out·in·k²` per output pixel and linear layers `in·out` per
    /// token. Attention counts the `q·kᵀ` and `attn·v` products; hashed attention uses
    /// the expected chunk length `min(chunk_size, h·w)`. Biases, norms, softmax and
    /// elementwise ops are free.
    pub fn count_mult_adds(&self, input_h: usize, input_w: usize) -> MultAdds {
        let cfg = &self.config;
        let (d, m, k) = (cfg.dim, cfg.window, cfg.key_window());
        let n = input_h * input_w;
        let windows = (input_h / m) * (input_w / m);
        let hidden = d * cfg.mlp_ratio;
        let embed = d / cfg.nlsa_reduction;
        let mut total = MultAdds::default();

        let nlsa = |total: &mut MultAdds| {
            total.conv += conv(embed, d, 3, n) + conv(d, d, 1, n);
            let span = if bucket_count(n, cfg.chunk_size) == 1 {
                n
            } else {
                cfg.chunk_size.min(n)
            };
            total.attention += (n * span * (embed + d) * cfg.hash_rounds) as u64;
        };
        let mlp = (2 * n * d * hidden) as u64;

        total.conv += conv(d, 3, 3, n);
        for _ in 0..cfg.n_pre_nlsa {
            nlsa(&mut total);
        }
        for _ in 0..cfg.n_groups {
            for _ in 0..cfg.blocks_per_group {
                total.linear += (4 * n * d * d) as u64 + mlp;
                total.attention += (2 * windows * m * m * m * m * d) as u64;
                let c = d / cfg.cab_compress;
                total.conv += conv(c, d, 3, n) + conv(d, c, 3, n);
                total.conv += 2 * conv(d / cfg.squeeze_ratio, d, 1, 1);
            }
            // Queries and output per pixel; keys and values per enlarged window.
            total.linear += (2 * n * d * d + 2 * windows * k * k * d * d) as u64 + mlp;
            total.attention += (2 * windows * m * m * k * k * d) as u64;
            total.conv += conv(d, d, 3, n);
        }
        total.conv += conv(d, d, 3, n);
        for _ in 0..cfg.n_post_nlsa {
            nlsa(&mut total);
        }
        total.conv += conv(3 * cfg.scale * cfg.scale, d, 3, n);
        total
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_model, ModelConfig};
    use super::*;

    #[test]
    fn single_conv_formulas() {
        assert_eq!(conv(4, 4, 1, 64), 1024);
        assert_eq!(3 * 3 * 3 * 8 + 8, 224);
        let cfg = ModelConfig {
            dim: 8,
            n_pre_nlsa: 0,
            n_post_nlsa: 0,
            n_groups: 0,
            ..Default::default()
        };
        let model = build_model(&cfg, 0).unwrap();
        assert_eq!(
            model.params.conv_first.weight.len() + model.params.conv_first.bias.len(),
            224
        );
    }

    #[test]
    fn conv_only_model_is_linear_in_area() {
        let cfg = ModelConfig {
            n_pre_nlsa: 0,
            n_post_nlsa: 0,
            n_groups: 0,
            ..Default::default()
        };
        let model = build_model(&cfg, 0).unwrap();
        let a = model.count_mult_adds(8, 8);
        assert_eq!(model.count_mult_adds(8, 16).total(), 2 * a.total());
        assert_eq!(a.attention, 0);
        // conv_first, conv_after_body and the upsampler conv.
        assert_eq!(a.total(), 64 * 9 * (16 * 3 + 16 * 16 + 48 * 16));
    }

    #[test]
    fn toy_tally() {
        let model = build_model(&ModelConfig::default(), 0).unwrap();
        // Spreadsheet for dim 16, window 4 (6 for keys), 2 heads, 8x8 input, 2+2 NLSA,
        // 1 group of 2 blocks, MLP hidden 32, CAB hidden 8, SE hidden 4, embed 4.
        let n = 64u64;
        let nlsa = 4 * 16 * 9 * n + 16 * 16 * n + n * 16 * 20;
        let hab =
            4 * n * 256 + 2 * n * 16 * 32 + 2 * 4 * 16 * 16 * 16 + 8 * 16 * 9 * n * 2 + 2 * 4 * 16;
        let ocab = 2 * n * 256 + 2 * 4 * 36 * 256 + 2 * n * 16 * 32 + 2 * 4 * 16 * 36 * 16;
        let convs = 16 * 3 * 9 * n + 2 * 256 * 9 * n + 48 * 16 * 9 * n;
        assert_eq!(
            model.count_mult_adds(8, 8).total(),
            4 * nlsa + 2 * hab + ocab + convs
        );

        let params = {
            let conv = |o: usize, i: usize, k: usize| o * i * k * k + o;
            let lin = |i: usize, o: usize| i * o + o;
            let norm = 32;
            let nl = conv(4, 16, 3) + conv(16, 16, 1);
            let hab = norm * 2
                + 4 * lin(16, 16)
                + 49 * 2
                + conv(8, 16, 3)
                + conv(16, 8, 3)
                + conv(4, 16, 1)
                + conv(16, 4, 1)
                + lin(16, 32)
                + lin(32, 16);
            let ocab = norm * 2 + 4 * lin(16, 16) + 81 * 2 + lin(16, 32) + lin(32, 16);
            conv(16, 3, 3) + 4 * nl + 2 * hab + ocab + conv(16, 16, 3) * 2 + conv(48, 16, 3)
        };
        assert_eq!(model.count_params(), params);
    }

    #[test]
    fn more_nlsa_blocks_cost_more() {
        let mut last = (0, 0);
        for extra in [0, 2, 4, 8] {
            let cfg = ModelConfig {
                n_pre_nlsa: extra / 2,
                n_post_nlsa: extra / 2,
                ..Default::default()
            };
            let model = build_model(&cfg, 0).unwrap();
            let now = (model.count_params(), model.count_mult_adds(16, 16).total());
            assert!(
                now.0 > last.0 && now.1 > last.1,
                "{extra}: {now:?} vs {last:?}"
            );
            last = now;
        }
    }
}
