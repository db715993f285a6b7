use std::rc::Rc;

use rand::Rng;

use super::{invert, AttentionConfig};
use crate::error::{Error, Result};
use crate::params::{linear_init, param_struct};
use crate::tensor::{Graph, Tensor, Var};

param_struct! {
    /// Query/key/value/output projections plus a learned relative-position bias table
    /// of shape `(1, 1, table_len, heads)`.
    pub struct AttentionWeights {
        q_weight,
        q_bias,
        k_weight,
        k_bias,
        v_weight,
        v_bias,
        proj_weight,
        proj_bias,
        rel_bias,
    }
}

impl AttentionWeights<Tensor> {
    /// Random projections; the bias table starts at zero.
    pub fn random<R: Rng + ?Sized>(
        dim: usize,
        heads: usize,
        table_len: usize,
        rng: &mut R,
    ) -> Self {
        let (q_weight, q_bias) = linear_init(dim, dim, rng);
        let (k_weight, k_bias) = linear_init(dim, dim, rng);
        let (v_weight, v_bias) = linear_init(dim, dim, rng);
        let (proj_weight, proj_bias) = linear_init(dim, dim, rng);
        AttentionWeights {
            q_weight,
            q_bias,
            k_weight,
            k_bias,
            v_weight,
            v_bias,
            proj_weight,
            proj_bias,
            rel_bias: Tensor::zeros([1, 1, table_len, heads]),
        }
    }

    pub fn zeros(dim: usize, heads: usize, table_len: usize) -> Self {
        let w = Tensor::zeros([1, 1, dim, dim]);
        let b = Tensor::zeros([1, 1, 1, dim]);
        AttentionWeights {
            q_weight: w.clone(),
            q_bias: b.clone(),
            k_weight: w.clone(),
            k_bias: b.clone(),
            v_weight: w.clone(),
            v_bias: b.clone(),
            proj_weight: w,
            proj_bias: b,
            rel_bias: Tensor::zeros([1, 1, table_len, heads]),
        }
    }

    pub fn load(&self, g: &mut Graph) -> AttentionWeights<Var> {
        self.map(&mut |t| g.leaf(t.clone()))
    }
}

/// Side of the key window used by overlapping cross-attention.
pub fn overlap_window_size(window: usize, overlap_ratio: f64) -> usize {
    ((1.0 + overlap_ratio) * window as f64).floor() as usize
}

/// Rows of the relative-position bias table for query windows of side `window` and key
/// windows of side `key_window`.
pub fn relative_bias_len(window: usize, key_window: usize) -> usize {
    (window + key_window - 1).pow(2)
}

/// Output of a windowed attention block and its attention probabilities, shaped
/// `(batch·windows, heads, queries, keys)`.
#[derive(Debug, Clone, Copy)]
pub struct WindowAttention {
    pub output: Var,
    pub attention: Var,
}

/// Gathers `(b·windows, 1, side², c)` token windows from a `(b, c, h, w)` image. Window
/// `(wy, wx)` starts at `(wy·m - pad + shift, wx·m - pad + shift)`, wrapping periodically.
fn window_index(shape: [usize; 4], m: usize, side: usize, pad: usize, shift: usize) -> Vec<usize> {
    let [b, c, h, w] = shape;
    let (nwy, nwx) = (h / m, w / m);
    let mut idx = Vec::with_capacity(b * nwy * nwx * side * side * c);
    for bi in 0..b {
        for wy in 0..nwy {
            for wx in 0..nwx {
                for i in 0..side {
                    let y = (wy * m + i + shift + h - pad % h) % h;
                    for j in 0..side {
                        let x = (wx * m + j + shift + w - pad % w) % w;
                        for ch in 0..c {
                            idx.push(((bi * c + ch) * h + y) * w + x);
                        }
                    }
                }
            }
        }
    }
    idx
}

/// `(bw, 1, n, c) -> (bw, heads, n, c/heads)`.
fn split_heads_index(bw: usize, n: usize, c: usize, heads: usize) -> Vec<usize> {
    let d = c / heads;
    let mut idx = Vec::with_capacity(bw * n * c);
    for wi in 0..bw {
        for hh in 0..heads {
            for t in 0..n {
                for e in 0..d {
                    idx.push((wi * n + t) * c + hh * d + e);
                }
            }
        }
    }
    idx
}

/// Bias table rows for every (query, key) pair: `(1, heads, m², side²)`.
fn bias_index(m: usize, side: usize, heads: usize) -> Vec<usize> {
    let span = m + side - 1;
    let mut idx = Vec::with_capacity(heads * m * m * side * side);
    for hh in 0..heads {
        for q in 0..m * m {
            let (qy, qx) = (q / m, q % m);
            for k in 0..side * side {
                let (ky, kx) = (k / side, k % side);
                let row = (ky + m - 1 - qy) * span + (kx + m - 1 - qx);
                idx.push(row * heads + hh);
            }
        }
    }
    idx
}

fn linear(g: &mut Graph, x: Var, weight: Var, bias: Var) -> Result<Var> {
    let y = g.matmul(x, weight, false)?;
    g.add(y, bias)
}

/// Multi-head attention of `window × window` query tiles against `key_window` tiles
/// sharing the same centre.
fn windowed_attention(
    g: &mut Graph,
    x: Var,
    cfg: &AttentionConfig,
    shift: usize,
    key_window: usize,
    p: &AttentionWeights<Var>,
) -> Result<WindowAttention> {
    cfg.validate()?;
    let shape = g.value(x).shape();
    let [b, c, h, w] = shape;
    let m = cfg.window;
    if c != cfg.dim {
        return Err(Error::shape(format!(
            "features have {c} channels but dim is {}",
            cfg.dim
        )));
    }
    if h % m != 0 || w % m != 0 {
        return Err(Error::shape(format!(
            "spatial size {h}x{w} is not divisible by window {m}; pad the input to a multiple of {m}"
        )));
    }
    let table = relative_bias_len(m, key_window);
    let bias_shape = g.value(p.rel_bias).shape();
    if bias_shape != [1, 1, table, cfg.heads] {
        return Err(Error::shape(format!(
            "relative bias table is {bias_shape:?}, expected {:?}",
            [1, 1, table, cfg.heads]
        )));
    }
    let bw = b * (h / m) * (w / m);
    let (nq, nk) = (m * m, key_window * key_window);
    let pad = (key_window - m) / 2;

    let q_index = window_index(shape, m, m, 0, shift);
    let xq = g.gather(x, Rc::new(q_index.clone()), [bw, 1, nq, c])?;
    let xk = if key_window == m {
        xq
    } else {
        g.gather(
            x,
            Rc::new(window_index(shape, m, key_window, pad, shift)),
            [bw, 1, nk, c],
        )?
    };

    let q = linear(g, xq, p.q_weight, p.q_bias)?;
    let k = linear(g, xk, p.k_weight, p.k_bias)?;
    let v = linear(g, xk, p.v_weight, p.v_bias)?;

    let (heads, d) = (cfg.heads, cfg.head_dim());
    let split_q = Rc::new(split_heads_index(bw, nq, c, heads));
    let split_k = Rc::new(split_heads_index(bw, nk, c, heads));
    let qh = g.gather(q, split_q.clone(), [bw, heads, nq, d])?;
    let kh = g.gather(k, split_k.clone(), [bw, heads, nk, d])?;
    let vh = g.gather(v, split_k, [bw, heads, nk, d])?;

    let scores = g.matmul(qh, kh, true)?;
    let scores = g.scale(scores, 1.0 / (d as f64).sqrt());
    let bias = g.gather(
        p.rel_bias,
        Rc::new(bias_index(m, key_window, heads)),
        [1, heads, nq, nk],
    )?;
    let scores = g.add(scores, bias)?;
    let attention = g.softmax(scores);

    let out = g.matmul(attention, vh, false)?;
    let merged = g.gather(out, Rc::new(invert(&split_q)), [bw, 1, nq, c])?;
    let projected = linear(g, merged, p.proj_weight, p.proj_bias)?;
    let output = g.gather(projected, Rc::new(invert(&q_index)), shape)?;
    Ok(WindowAttention { output, attention })
}

/// Window self-attention with an optional cyclic shift (`cfg.shift`). Shifted windows
/// wrap around the border without masking.
pub fn window_msa_graph(
    g: &mut Graph,
    x: Var,
    cfg: &AttentionConfig,
    p: &AttentionWeights<Var>,
) -> Result<WindowAttention> {
    windowed_attention(g, x, cfg, cfg.shift, cfg.window, p)
}

/// Queries from `window × window` tiles attend to keys and values from enlarged tiles of
/// side `floor((1 + overlap_ratio)·window)` centred on them, with periodic padding.
pub fn overlapping_cross_attention_graph(
    g: &mut Graph,
    x: Var,
    cfg: &AttentionConfig,
    p: &AttentionWeights<Var>,
) -> Result<WindowAttention> {
    cfg.validate()?;
    windowed_attention(
        g,
        x,
        cfg,
        0,
        overlap_window_size(cfg.window, cfg.overlap_ratio),
        p,
    )
}

fn run(
    f: impl Fn(&mut Graph, Var, &AttentionConfig, &AttentionWeights<Var>) -> Result<WindowAttention>,
    features: &Tensor,
    cfg: &AttentionConfig,
    params: &AttentionWeights,
) -> Result<Tensor> {
    let mut g = Graph::new();
    let x = g.constant(features.clone());
    let p = params.map(&mut |t| g.constant(t.clone()));
    let out = f(&mut g, x, cfg, &p)?;
    Ok(g.value(out.output).clone())
}

pub fn window_msa(
    features: &Tensor,
    cfg: &AttentionConfig,
    params: &AttentionWeights,
) -> Result<Tensor> {
    run(window_msa_graph, features, cfg, params)
}

pub fn overlapping_cross_attention(
    features: &Tensor,
    cfg: &AttentionConfig,
    params: &AttentionWeights,
) -> Result<Tensor> {
    run(overlapping_cross_attention_graph, features, cfg, params)
}
