use std::rc::Rc;

use rand::Rng;

use super::lsh::{bucket_attention, bucket_count, spherical_lsh};
use super::{image_to_tokens_index, invert, AttentionConfig};
use crate::error::{Error, Result};
use crate::params::{conv_init, param_struct};
use crate::tensor::{Boundary, Graph, Tensor, Var};

/// Added to the squared norm before normalizing keys, so zero rows stay finite.
pub const NORM_EPS: f64 = 1e-12;

param_struct! {
    /// Matching embedding (3×3 conv to `dim / reduction` channels) and value projection
    /// (1×1 conv) for non-local sparse attention.
    pub struct NlsaWeights {
        match_weight,
        match_bias,
        value_weight,
        value_bias,
    }
}

impl NlsaWeights<Tensor> {
    pub fn random<R: Rng + ?Sized>(dim: usize, reduction: usize, rng: &mut R) -> Self {
        let embed = (dim / reduction.max(1)).max(1);
        let (match_weight, match_bias) = conv_init(embed, dim, 3, rng);
        let (value_weight, value_bias) = conv_init(dim, dim, 1, rng);
        NlsaWeights {
            match_weight,
            match_bias,
            value_weight,
            value_bias,
        }
    }
}

/// `x / sqrt(|x|² + NORM_EPS)` for every row of the last axis.
pub fn l2_normalize_rows(g: &mut Graph, a: Var) -> Var {
    let x = g.value(a);
    let w = x.shape()[3];
    let mut y = x.clone();
    let mut norms = Vec::with_capacity(x.len() / w.max(1));
    for row in y.data_mut().chunks_mut(w) {
        let n = (row.iter().map(|v| v * v).sum::<f64>() + NORM_EPS).sqrt();
        row.iter_mut().for_each(|v| *v /= n);
        norms.push(n);
    }
    let yc = y.clone();
    g.record(
        "l2_normalize",
        &[a],
        y,
        Box::new(move |gy| {
            let mut gx = gy.clone();
            for ((grow, yrow), n) in gx
                .data_mut()
                .chunks_mut(w)
                .zip(yc.data().chunks(w))
                .zip(&norms)
            {
                let dot: f64 = grow.iter().zip(yrow).map(|(g, y)| g * y).sum();
                for (gv, yv) in grow.iter_mut().zip(yrow) {
                    *gv = (*gv - yv * dot) / n;
                }
            }
            vec![(a, gx)]
        }),
    )
}

fn round_seed(seed: u64, round: usize) -> u64 {
    seed ^ (round as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Hashed sparse attention on token matrices.
///
/// `embed` is `(b, 1, n, e)` and `value` is `(b, 1, n, c)`. Keys are the row-normalized
/// embeddings, queries the raw embeddings. Keys are bucketed by [`spherical_lsh`] with
/// [`bucket_count`] buckets, each token attends within its chunk, and the outputs of
/// `cfg.hash_rounds` independent hashings are averaged.
pub fn nlsa_tokens(g: &mut Graph, embed: Var, value: Var, cfg: &AttentionConfig) -> Result<Var> {
    cfg.validate()?;
    let [b, _, n, e] = g.value(embed).shape();
    let key = l2_normalize_rows(g, embed);
    let buckets = bucket_count(n, cfg.chunk_size);
    let mut total: Option<Var> = None;
    for round in 0..cfg.hash_rounds {
        let keys = g.value(key);
        let assignments = (0..b)
            .map(|bi| {
                spherical_lsh(
                    &keys.data()[bi * n * e..][..n * e],
                    e,
                    buckets,
                    cfg.chunk_size,
                    round_seed(cfg.seed, round),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let out = bucket_attention(g, embed, key, value, Rc::new(assignments))?;
        total = Some(match total {
            None => out,
            Some(t) => g.add(t, out)?,
        });
    }
    let total = total.expect("at least one round");
    Ok(g.scale(total, 1.0 / cfg.hash_rounds as f64))
}

/// Non-local sparse attention on a `(b, dim, h, w)` feature map, with a residual
/// connection: `x + attention(x)`.
pub fn nlsa_graph(
    g: &mut Graph,
    x: Var,
    cfg: &AttentionConfig,
    p: &NlsaWeights<Var>,
) -> Result<Var> {
    let shape = g.value(x).shape();
    let [b, c, h, w] = shape;
    if c != cfg.dim {
        return Err(Error::shape(format!(
            "features have {c} channels but dim is {}",
            cfg.dim
        )));
    }
    let embed_c = g.value(p.match_weight).shape()[0];
    let m = g.conv2d(x, p.match_weight, 1, Boundary::Periodic)?;
    let m = g.add(m, p.match_bias)?;
    let v = g.conv2d(x, p.value_weight, 1, Boundary::Periodic)?;
    let v = g.add(v, p.value_bias)?;
    let n = h * w;
    let embed = g.gather(
        m,
        Rc::new(image_to_tokens_index([b, embed_c, h, w])),
        [b, 1, n, embed_c],
    )?;
    let to_tokens = image_to_tokens_index(shape);
    let value = g.gather(v, Rc::new(to_tokens.clone()), [b, 1, n, c])?;
    let attended = nlsa_tokens(g, embed, value, cfg)?;
    let back = g.gather(attended, Rc::new(invert(&to_tokens)), shape)?;
    g.add(x, back)
}

pub fn nlsa(features: &Tensor, cfg: &AttentionConfig, params: &NlsaWeights) -> Result<Tensor> {
    let mut g = Graph::new();
    let x = g.constant(features.clone());
    let p = params.map(&mut |t| g.constant(t.clone()));
    let y = nlsa_graph(&mut g, x, cfg, &p)?;
    Ok(g.value(y).clone())
}
