//! A toy super-resolution network: shallow conv, non-local sparse attention blocks on
//! both sides of a hybrid-attention body, and a pixel-shuffle upsampler.
//!
//! ```text
//! lr -> conv3x3 -> NLSA x n_pre -> [HAB x blocks, OCAB, conv3x3 (+skip)] x groups
//!    -> conv3x3 (+shallow skip) -> NLSA x n_post -> conv3x3 -> pixel_shuffle -> sr
//! ```

mod checkpoint;
mod count;
mod forward;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use count::MultAdds;
pub use forward::forward_graph;
pub use train::{loss_and_grad, train_step, OptimizerConfig, OptimizerState};

use crate::attention::{
    overlap_window_size, relative_bias_len, AttentionConfig, AttentionWeights,
    ChannelAttentionWeights, NlsaWeights,
};
use crate::error::{Error, Result};
use crate::params::{conv_init, linear_init, param_struct, param_tree, ParamTree};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n_pre_nlsa: usize,
    pub n_post_nlsa: usize,
    pub n_groups: usize,
    pub blocks_per_group: usize,
    pub dim: usize,
    pub window: usize,
    pub chunk_size: usize,
    pub heads: usize,
    /// Upscaling factor, 2 or 4.
    pub scale: usize,
    /// Weight of the channel-attention branch inside each hybrid block.
    pub cab_weight: f64,
    pub overlap_ratio: f64,
    pub mlp_ratio: usize,
    /// Hidden channels of the conv branch are `dim / cab_compress`.
    pub cab_compress: usize,
    pub squeeze_ratio: usize,
    /// Matching embeddings of NLSA have `dim / nlsa_reduction` channels.
    pub nlsa_reduction: usize,
    pub hash_rounds: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_pre_nlsa: 2,
            n_post_nlsa: 2,
            n_groups: 1,
            blocks_per_group: 2,
            dim: 16,
            window: 4,
            chunk_size: 16,
            heads: 2,
            scale: 4,
            cab_weight: 0.01,
            overlap_ratio: 0.5,
            mlp_ratio: 2,
            cab_compress: 2,
            squeeze_ratio: 4,
            nlsa_reduction: 4,
            hash_rounds: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale != 2 && self.scale != 4 {
            return Err(Error::config(format!(
                "scale must be 2 or 4, got {}",
                self.scale
            )));
        }
        for (name, divisor) in [
            ("heads", self.heads),
            ("cab_compress", self.cab_compress),
            ("squeeze_ratio", self.squeeze_ratio),
            ("nlsa_reduction", self.nlsa_reduction),
        ] {
            if divisor == 0 || self.dim == 0 || !self.dim.is_multiple_of(divisor) {
                return Err(Error::config(format!(
                    "dim {} must be a positive multiple of {name} {divisor}",
                    self.dim
                )));
            }
        }
        if self.mlp_ratio == 0 {
            return Err(Error::config("mlp_ratio must be at least 1"));
        }
        if !self.cab_weight.is_finite() {
            return Err(Error::config("cab_weight must be finite"));
        }
        self.attention(0, 0).validate()
    }

    /// Attention settings shared by every block, with the given shift and hash seed.
    pub fn attention(&self, shift: usize, seed: u64) -> AttentionConfig {
        AttentionConfig {
            dim: self.dim,
            heads: self.heads,
            window: self.window,
            shift,
            overlap_ratio: self.overlap_ratio,
            chunk_size: self.chunk_size,
            hash_rounds: self.hash_rounds,
            seed,
        }
    }

    /// Alternating shifted windows: even blocks unshifted, odd blocks shifted by half.
    pub fn shift_for_block(&self, block: usize) -> usize {
        if block % 2 == 1 {
            self.window / 2
        } else {
            0
        }
    }

    pub fn key_window(&self) -> usize {
        overlap_window_size(self.window, self.overlap_ratio)
    }
}

param_struct! {
    /// Conv kernel `(out, in, k, k)` and bias `(1, out, 1, 1)`.
    pub struct Conv { weight, bias }
}

param_struct! {
    /// Affine part of a layer norm over channels, both `(1, 1, 1, dim)`.
    pub struct Norm { weight, bias }
}

param_struct! {
    pub struct Mlp { fc1_weight, fc1_bias, fc2_weight, fc2_bias }
}

param_tree! {
    /// Window self-attention plus a weighted conv/channel-attention branch, then an MLP.
    pub struct HybridBlock {
        norm1: Norm<T>,
        attn: AttentionWeights<T>,
        cab_conv1: Conv<T>,
        cab_conv2: Conv<T>,
        channel: ChannelAttentionWeights<T>,
        norm2: Norm<T>,
        mlp: Mlp<T>,
    }
}

param_tree! {
    /// Overlapping cross-attention followed by an MLP.
    pub struct CrossBlock {
        norm1: Norm<T>,
        attn: AttentionWeights<T>,
        norm2: Norm<T>,
        mlp: Mlp<T>,
    }
}

param_tree! {
    pub struct Group {
        blocks: Vec<HybridBlock<T>>,
        cross: CrossBlock<T>,
        conv: Conv<T>,
    }
}

param_tree! {
    /// Every learnable tensor of the network, in checkpoint order.
    pub struct ModelParams {
        conv_first: Conv<T>,
        pre_nlsa: Vec<NlsaWeights<T>>,
        groups: Vec<Group<T>>,
        conv_after_body: Conv<T>,
        post_nlsa: Vec<NlsaWeights<T>>,
        conv_up: Conv<T>,
    }
}

impl ModelParams<Tensor> {
    /// Named tensors in layout order.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        self.visit_tree("model", &mut |name, t| out.push((name, t)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        self.visit_tree_mut(&mut |t| out.push(t));
        out
    }

    pub fn zeros_like(&self) -> Self {
        self.map(&mut |t| Tensor::zeros(t.shape()))
    }
}

/// Configuration, weights and the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    /// Initialization seed, also the base of every NLSA hash seed.
    pub seed: u64,
    pub params: ModelParams,
}

fn conv<R: rand::Rng>(out_c: usize, in_c: usize, k: usize, rng: &mut R) -> Conv {
    let (weight, bias) = conv_init(out_c, in_c, k, rng);
    Conv { weight, bias }
}

fn norm(dim: usize) -> Norm {
    Norm {
        weight: Tensor::full([1, 1, 1, dim], 1.0),
        bias: Tensor::zeros([1, 1, 1, dim]),
    }
}

fn mlp<R: rand::Rng>(dim: usize, hidden: usize, rng: &mut R) -> Mlp {
    let (fc1_weight, fc1_bias) = linear_init(dim, hidden, rng);
    let (fc2_weight, fc2_bias) = linear_init(hidden, dim, rng);
    Mlp {
        fc1_weight,
        fc1_bias,
        fc2_weight,
        fc2_bias,
    }
}

/// Builds a model with fan-in uniform weights drawn from a generator seeded by `seed`.
/// Layer norms start as the identity and relative-position biases at zero.
pub fn build_model(cfg: &ModelConfig, seed: u64) -> Result<Model> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (d, m) = (cfg.dim, cfg.window);
    let hidden = d * cfg.mlp_ratio;
    let window_table = relative_bias_len(m, m);
    let cross_table = relative_bias_len(m, cfg.key_window());

    let conv_first = conv(d, 3, 3, &mut rng);
    let pre_nlsa = (0..cfg.n_pre_nlsa)
        .map(|_| NlsaWeights::random(d, cfg.nlsa_reduction, &mut rng))
        .collect();
    let mut groups = Vec::with_capacity(cfg.n_groups);
    for _ in 0..cfg.n_groups {
        let mut blocks = Vec::with_capacity(cfg.blocks_per_group);
        for _ in 0..cfg.blocks_per_group {
            blocks.push(HybridBlock {
                norm1: norm(d),
                attn: AttentionWeights::random(d, cfg.heads, window_table, &mut rng),
                cab_conv1: conv(d / cfg.cab_compress, d, 3, &mut rng),
                cab_conv2: conv(d, d / cfg.cab_compress, 3, &mut rng),
                channel: ChannelAttentionWeights::random(d, cfg.squeeze_ratio, &mut rng)?,
                norm2: norm(d),
                mlp: mlp(d, hidden, &mut rng),
            });
        }
        let cross = CrossBlock {
            norm1: norm(d),
            attn: AttentionWeights::random(d, cfg.heads, cross_table, &mut rng),
            norm2: norm(d),
            mlp: mlp(d, hidden, &mut rng),
        };
        groups.push(Group {
            blocks,
            cross,
            conv: conv(d, d, 3, &mut rng),
        });
    }
    let conv_after_body = conv(d, d, 3, &mut rng);
    let post_nlsa = (0..cfg.n_post_nlsa)
        .map(|_| NlsaWeights::random(d, cfg.nlsa_reduction, &mut rng))
        .collect();
    let conv_up = conv(3 * cfg.scale * cfg.scale, d, 3, &mut rng);
    Ok(Model {
        config: cfg.clone(),
        seed,
        params: ModelParams {
            conv_first,
            pre_nlsa,
            groups,
            conv_after_body,
            post_nlsa,
            conv_up,
        },
    })
}

impl Model {
    /// Total number of scalar parameters.
    pub fn count_params(&self) -> usize {
        let mut n = 0;
        self.params.visit_tree("", &mut |_, t| n += t.len());
        n
    }

    /// Hash seed of the `index`-th NLSA block (pre blocks first, then post blocks).
    pub fn nlsa_seed(&self, index: usize) -> u64 {
        self.seed
            .wrapping_mul(0x2545_F491_4F6C_DD1D)
            .wrapping_add(index as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ModelConfig::default().validate().is_ok());
        let bad = [
            ModelConfig {
                scale: 3,
                ..Default::default()
            },
            ModelConfig {
                heads: 3,
                ..Default::default()
            },
            ModelConfig {
                squeeze_ratio: 5,
                ..Default::default()
            },
            ModelConfig {
                chunk_size: 0,
                ..Default::default()
            },
            ModelConfig {
                overlap_ratio: -1.0,
                ..Default::default()
            },
            ModelConfig {
                window: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(
                matches!(build_model(&cfg, 0), Err(Error::Config(_))),
                "{cfg:?}"
            );
        }
        let err = serde_json::from_str::<ModelConfig>(r#"{"dims": 8}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn build_is_deterministic() {
        let cfg = ModelConfig::default();
        assert_eq!(build_model(&cfg, 7).unwrap(), build_model(&cfg, 7).unwrap());
        assert_ne!(
            build_model(&cfg, 7).unwrap().params,
            build_model(&cfg, 8).unwrap().params
        );
    }

    #[test]
    fn names_are_unique_and_ordered() {
        let model = build_model(&ModelConfig::default(), 0).unwrap();
        let names: Vec<String> = model.params.named().into_iter().map(|(n, _)| n).collect();
        let unique: std::collections::BTreeSet<&String> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        assert_eq!(names[0], "model.conv_first.weight");
        assert!(names.contains(&"model.groups.0.blocks.1.attn.rel_bias".to_string()));
        assert_eq!(names.last().unwrap(), "model.conv_up.bias");
    }
}
