use std::rc::Rc;

use super::{Conv, CrossBlock, HybridBlock, Mlp, Model, ModelParams, Norm};
use crate::attention::{
    channel_attention_graph, image_to_tokens_index, invert, nlsa_graph,
    overlapping_cross_attention_graph, window_msa_graph,
};
use crate::error::{Error, Result};
use crate::tensor::{Boundary, Graph, Tensor, Var};

pub(crate) const LAYER_NORM_EPS: f64 = 1e-5;

fn conv(g: &mut Graph, x: Var, p: &Conv<Var>) -> Result<Var> {
    let y = g.conv2d(x, p.weight, 1, Boundary::Periodic)?;
    g.add(y, p.bias)
}

/// Image `(b, c, h, w)` to tokens `(b, 1, h·w, c)` and back.
struct Tokens {
    image_shape: [usize; 4],
    to_tokens: Rc<Vec<usize>>,
    to_image: Rc<Vec<usize>>,
}

impl Tokens {
    fn new(image_shape: [usize; 4]) -> Self {
        let idx = image_to_tokens_index(image_shape);
        let inv = invert(&idx);
        Tokens {
            image_shape,
            to_tokens: Rc::new(idx),
            to_image: Rc::new(inv),
        }
    }

    fn tokens(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let [b, c, h, w] = self.image_shape;
        g.gather(x, self.to_tokens.clone(), [b, 1, h * w, c])
    }

    fn image(&self, g: &mut Graph, t: Var) -> Result<Var> {
        g.gather(t, self.to_image.clone(), self.image_shape)
    }
}

fn layer_norm(g: &mut Graph, t: Var, p: &Norm<Var>) -> Result<Var> {
    let n = g.layer_norm(t, LAYER_NORM_EPS);
    let n = g.mul(n, p.weight)?;
    g.add(n, p.bias)
}

fn mlp(g: &mut Graph, t: Var, p: &Mlp<Var>) -> Result<Var> {
    let h = g.matmul(t, p.fc1_weight, false)?;
    let h = g.add(h, p.fc1_bias)?;
    let h = g.gelu(h);
    let o = g.matmul(h, p.fc2_weight, false)?;
    g.add(o, p.fc2_bias)
}

/// `x + f(norm(x))` with `f` an MLP over channels.
fn mlp_residual(
    g: &mut Graph,
    x: Var,
    tok: &Tokens,
    norm: &Norm<Var>,
    p: &Mlp<Var>,
) -> Result<Var> {
    let t = tok.tokens(g, x)?;
    let n = layer_norm(g, t, norm)?;
    let m = mlp(g, n, p)?;
    let m = tok.image(g, m)?;
    g.add(x, m)
}

fn normed_image(g: &mut Graph, x: Var, tok: &Tokens, norm: &Norm<Var>) -> Result<Var> {
    let t = tok.tokens(g, x)?;
    let n = layer_norm(g, t, norm)?;
    tok.image(g, n)
}

fn hybrid_block(
    g: &mut Graph,
    x: Var,
    model: &Model,
    shift: usize,
    tok: &Tokens,
    p: &HybridBlock<Var>,
) -> Result<Var> {
    let n = normed_image(g, x, tok, &p.norm1)?;
    let attn = window_msa_graph(g, n, &model.config.attention(shift, 0), &p.attn)?.output;
    let c = conv(g, n, &p.cab_conv1)?;
    let c = g.gelu(c);
    let c = conv(g, c, &p.cab_conv2)?;
    let c = channel_attention_graph(g, c, &p.channel)?;
    let c = g.scale(c, model.config.cab_weight);
    let y = g.add(x, attn)?;
    let y = g.add(y, c)?;
    mlp_residual(g, y, tok, &p.norm2, &p.mlp)
}

fn cross_block(
    g: &mut Graph,
    x: Var,
    model: &Model,
    tok: &Tokens,
    p: &CrossBlock<Var>,
) -> Result<Var> {
    let n = normed_image(g, x, tok, &p.norm1)?;
    let attn =
        overlapping_cross_attention_graph(g, n, &model.config.attention(0, 0), &p.attn)?.output;
    let y = g.add(x, attn)?;
    mlp_residual(g, y, tok, &p.norm2, &p.mlp)
}

/// Records the forward pass of `model` on `lr` (`(b, 3, h, w)`), using the weights in
/// `p` (normally `model.params` loaded onto `g`).
pub fn forward_graph(g: &mut Graph, model: &Model, p: &ModelParams<Var>, lr: Var) -> Result<Var> {
    let cfg = &model.config;
    let [b, c, h, w] = g.value(lr).shape();
    if c != 3 {
        return Err(Error::shape(format!(
            "expected a 3-channel image, got {c} channels"
        )));
    }
    if h % cfg.window != 0 || w % cfg.window != 0 {
        return Err(Error::shape(format!(
            "input {h}x{w} is not divisible by window {}; pad the input to a multiple of {}",
            cfg.window, cfg.window
        )));
    }
    let tok = Tokens::new([b, cfg.dim, h, w]);

    let mut x = conv(g, lr, &p.conv_first)?;
    for (i, nl) in p.pre_nlsa.iter().enumerate() {
        x = nlsa_graph(g, x, &cfg.attention(0, model.nlsa_seed(i)), nl)?;
    }
    let shallow = x;
    for group in &p.groups {
        let skip = x;
        for (i, block) in group.blocks.iter().enumerate() {
            x = hybrid_block(g, x, model, cfg.shift_for_block(i), &tok, block)?;
        }
        x = cross_block(g, x, model, &tok, &group.cross)?;
        x = conv(g, x, &group.conv)?;
        x = g.add(x, skip)?;
    }
    x = conv(g, x, &p.conv_after_body)?;
    x = g.add(x, shallow)?;
    for (i, nl) in p.post_nlsa.iter().enumerate() {
        x = nlsa_graph(
            g,
            x,
            &cfg.attention(0, model.nlsa_seed(cfg.n_pre_nlsa + i)),
            nl,
        )?;
    }
    let up = conv(g, x, &p.conv_up)?;
    g.pixel_shuffle(up, cfg.scale)
}

impl Model {
    /// Super-resolves a `(b, 3, h, w)` batch to `(b, 3, h·scale, w·scale)`.
    pub fn forward(&self, lr: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let x = g.constant(lr.clone());
        let p = self.params.map(&mut |t| g.constant(t.clone()));
        let y = forward_graph(&mut g, self, &p, x)?;
        Ok(g.value(y).clone())
    }
}
