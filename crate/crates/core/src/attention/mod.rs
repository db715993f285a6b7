//! Attention blocks at toy scale.
//!
//! Every block maps a `(batch, dim, height, width)` feature map to one of the same shape
//! and is recorded on a [`Graph`](crate::tensor::Graph) so gradients flow through it. The
//! plain-tensor wrappers build a throwaway graph.

mod channel;
mod lsh;
mod nlsa;
mod window;

use serde::{Deserialize, Serialize};

pub use channel::{channel_attention, channel_attention_graph, ChannelAttentionWeights};
pub use lsh::{bucket_attention, bucket_count, spherical_lsh, BucketAssignment};
pub use nlsa::{l2_normalize_rows, nlsa, nlsa_graph, nlsa_tokens, NlsaWeights};
pub use window::{
    overlap_window_size, overlapping_cross_attention, overlapping_cross_attention_graph,
    relative_bias_len, window_msa, window_msa_graph, AttentionWeights, WindowAttention,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttentionConfig {
    pub dim: usize,
    pub heads: usize,
    /// Side of the square attention window.
    pub window: usize,
    /// Cyclic shift applied before windowing.
    pub shift: usize,
    /// Key windows of overlapping cross-attention span `floor((1 + overlap_ratio)·window)`.
    pub overlap_ratio: f64,
    /// Maximum tokens per hash bucket in non-local sparse attention.
    pub chunk_size: usize,
    /// Independent hash rounds whose outputs are averaged.
    pub hash_rounds: usize,
    pub seed: u64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        AttentionConfig {
            dim: 16,
            heads: 2,
            window: 4,
            shift: 0,
            overlap_ratio: 0.5,
            chunk_size: 144,
            hash_rounds: 1,
            seed: 0,
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || self.dim == 0 || !self.dim.is_multiple_of(self.heads) {
            return Err(Error::config(format!(
                "dim {} must be a positive multiple of heads {}",
                self.dim, self.heads
            )));
        }
        if self.window == 0 {
            return Err(Error::config("window must be at least 1"));
        }
        if self.shift >= self.window {
            return Err(Error::config(format!(
                "shift {} must be smaller than window {}",
                self.shift, self.window
            )));
        }
        if self.chunk_size == 0 {
            return Err(Error::config("chunk_size must be at least 1"));
        }
        if self.hash_rounds == 0 {
            return Err(Error::config("hash_rounds must be at least 1"));
        }
        if !(self.overlap_ratio >= 0.0 && self.overlap_ratio.is_finite()) {
            return Err(Error::config(format!(
                "overlap_ratio {} must be finite and non-negative",
                self.overlap_ratio
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.dim / self.heads
    }
}

/// Flat token index `(b, 0, y·w + x, c)` for every element of a `(b, 1, h·w, c)` token
/// matrix taken from a `(b, c, h, w)` image.
pub(crate) fn image_to_tokens_index(shape: [usize; 4]) -> Vec<usize> {
    let [b, c, h, w] = shape;
    let mut idx = Vec::with_capacity(b * c * h * w);
    for bi in 0..b {
        for t in 0..h * w {
            for ci in 0..c {
                idx.push(((bi * c + ci) * h + t / w) * w + t % w);
            }
        }
    }
    idx
}

/// Inverse permutation of `perm`.
pub(crate) fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (o, &i) in perm.iter().enumerate() {
        inv[i] = o;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_checks() {
        assert!(AttentionConfig::default().validate().is_ok());
        let bad = [
            AttentionConfig {
                heads: 3,
                ..Default::default()
            },
            AttentionConfig {
                shift: 4,
                ..Default::default()
            },
            AttentionConfig {
                chunk_size: 0,
                ..Default::default()
            },
            AttentionConfig {
                overlap_ratio: -0.1,
                ..Default::default()
            },
            AttentionConfig {
                hash_rounds: 0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert_eq!(AttentionConfig::default().chunk_size, 144);
    }

    #[test]
    fn token_index_is_a_permutation() {
        let idx = image_to_tokens_index([2, 3, 2, 4]);
        let inv = invert(&idx);
        for (o, &i) in idx.iter().enumerate() {
            assert_eq!(inv[i], o);
        }
    }
}
