use rand::Rng;

use crate::error::{Error, Result};
use crate::params::{conv_init, param_struct};
use crate::tensor::{Boundary, Graph, Tensor, Var};

param_struct! {
    /// Squeeze-excitation weights: a `dim -> dim/squeeze_ratio -> dim` bottleneck of 1×1 convs.
    pub struct ChannelAttentionWeights {
        down_weight,
        down_bias,
        up_weight,
        up_bias,
    }
}

impl ChannelAttentionWeights<Tensor> {
    /// Fails unless `dim` is a positive multiple of `squeeze_ratio`.
    pub fn random<R: Rng + ?Sized>(dim: usize, squeeze_ratio: usize, rng: &mut R) -> Result<Self> {
        if squeeze_ratio == 0 || dim == 0 || !dim.is_multiple_of(squeeze_ratio) {
            return Err(Error::config(format!(
                "channels {dim} are not divisible by squeeze ratio {squeeze_ratio}"
            )));
        }
        let hidden = dim / squeeze_ratio;
        let (down_weight, down_bias) = conv_init(hidden, dim, 1, rng);
        let (up_weight, up_bias) = conv_init(dim, hidden, 1, rng);
        Ok(ChannelAttentionWeights {
            down_weight,
            down_bias,
            up_weight,
            up_bias,
        })
    }

    pub fn zeros(dim: usize, hidden: usize) -> Self {
        ChannelAttentionWeights {
            down_weight: Tensor::zeros([hidden, dim, 1, 1]),
            down_bias: Tensor::zeros([1, hidden, 1, 1]),
            up_weight: Tensor::zeros([dim, hidden, 1, 1]),
            up_bias: Tensor::zeros([1, dim, 1, 1]),
        }
    }
}

/// Rescales each channel by `sigmoid(up(gelu(down(mean_hw(x)))))`.
pub fn channel_attention_graph(
    g: &mut Graph,
    x: Var,
    p: &ChannelAttentionWeights<Var>,
) -> Result<Var> {
    let c = g.value(x).channels();
    let [hidden, cin, _, _] = g.value(p.down_weight).shape();
    if cin != c || g.value(p.up_weight).shape() != [c, hidden, 1, 1] {
        return Err(Error::shape(format!(
            "channel attention weights do not fit {c} channels (down {:?}, up {:?})",
            g.value(p.down_weight).shape(),
            g.value(p.up_weight).shape()
        )));
    }
    let pooled = g.mean_hw(x);
    let z = g.conv2d(pooled, p.down_weight, 1, Boundary::Periodic)?;
    let z = g.add(z, p.down_bias)?;
    let z = g.gelu(z);
    let s = g.conv2d(z, p.up_weight, 1, Boundary::Periodic)?;
    let s = g.add(s, p.up_bias)?;
    let s = g.sigmoid(s);
    g.mul(x, s)
}

pub fn channel_attention(features: &Tensor, params: &ChannelAttentionWeights) -> Result<Tensor> {
    let mut g = Graph::new();
    let x = g.constant(features.clone());
    let p = params.map(&mut |t| g.constant(t.clone()));
    let y = channel_attention_graph(&mut g, x, &p)?;
    Ok(g.value(y).clone())
}
