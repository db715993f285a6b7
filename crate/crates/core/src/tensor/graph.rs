//! Reverse-mode differentiation over a linear tape.
//!
//! Each recorded operation stores its value together with a pullback that maps the
//! cotangent of its output to cotangents of its inputs. Nodes are appended in
//! evaluation order, so a single reverse sweep visits them topologically.

use std::rc::Rc;

use super::conv::{conv2d, conv2d_input_adjoint, conv2d_kernel_grad, Boundary};
use super::{Shape, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Maps an output cotangent to `(parent, cotangent)` pairs.
pub type Pullback = Box<dyn Fn(&Tensor) -> Vec<(Var, Tensor)>>;

struct Node {
    op: &'static str,
    value: Tensor,
    needs_grad: bool,
    pullback: Option<Pullback>,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Cotangents produced by [`Graph::backward`], indexed by [`Var`].
pub struct Grads(Vec<Option<Tensor>>);

impl Grads {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.0.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.0.get_mut(v.0).and_then(Option::take)
    }
}

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_C: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + GELU_C * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let u = SQRT_2_OVER_PI * (x + GELU_C * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_C * x * x)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Checks that `small` broadcasts against `big` (each axis equal or 1).
fn check_broadcast(big: Shape, small: Shape, op: &str) -> Result<()> {
    if big.iter().zip(&small).all(|(&b, &s)| s == b || s == 1) {
        Ok(())
    } else {
        Err(Error::shape(format!(
            "{op}: {small:?} does not broadcast to {big:?}"
        )))
    }
}

/// Flat index into a broadcast operand for every element of the full shape.
fn broadcast_index(big: Shape, small: Shape) -> Vec<usize> {
    let mut idx = Vec::with_capacity(big.iter().product());
    for b in 0..big[0] {
        let b2 = if small[0] == 1 { 0 } else { b };
        for c in 0..big[1] {
            let c2 = if small[1] == 1 { 0 } else { c };
            for h in 0..big[2] {
                let h2 = if small[2] == 1 { 0 } else { h };
                let base = ((b2 * small[1] + c2) * small[2] + h2) * small[3];
                for w in 0..big[3] {
                    idx.push(base + if small[3] == 1 { 0 } else { w });
                }
            }
        }
    }
    idx
}

fn reduce_to(g: &Tensor, small: Shape, idx: &[usize]) -> Tensor {
    let mut out = Tensor::zeros(small);
    let d = out.data_mut();
    for (&i, &v) in idx.iter().zip(g.data()) {
        d[i] += v;
    }
    out
}

/// Batched matrix product over the trailing two axes. `b` may broadcast over the
/// leading two axes.
fn matmul_raw(a: &Tensor, b: &Tensor, trans_a: bool, trans_b: bool) -> Result<Tensor> {
    let [ab, ac, ar, acol] = a.shape();
    let [bb, bc, br, bcol] = b.shape();
    let (m, k) = if trans_a { (acol, ar) } else { (ar, acol) };
    let (k2, n) = if trans_b { (bcol, br) } else { (br, bcol) };
    if k != k2 {
        return Err(Error::shape(format!(
            "matmul: inner dimensions differ ({:?} x {:?})",
            a.shape(),
            b.shape()
        )));
    }
    if !((bb == ab || bb == 1) && (bc == ac || bc == 1)) {
        return Err(Error::shape(format!(
            "matmul: batch axes of {:?} do not broadcast to {:?}",
            b.shape(),
            a.shape()
        )));
    }
    let mut out = Tensor::zeros([ab, ac, m, n]);
    let (ad, bd) = (a.data(), b.data());
    let od = out.data_mut();
    for i0 in 0..ab {
        for i1 in 0..ac {
            let a_off = (i0 * ac + i1) * ar * acol;
            let b_off =
                ((if bb == 1 { 0 } else { i0 }) * bc + if bc == 1 { 0 } else { i1 }) * br * bcol;
            let o_off = (i0 * ac + i1) * m * n;
            for i in 0..m {
                let orow = &mut od[o_off + i * n..o_off + (i + 1) * n];
                for p in 0..k {
                    let av = if trans_a {
                        ad[a_off + p * acol + i]
                    } else {
                        ad[a_off + i * acol + p]
                    };
                    if av == 0.0 {
                        continue;
                    }
                    if trans_b {
                        for (j, o) in orow.iter_mut().enumerate() {
                            *o += av * bd[b_off + j * bcol + p];
                        }
                    } else {
                        let brow = &bd[b_off + p * bcol..b_off + (p + 1) * bcol];
                        for (o, bv) in orow.iter_mut().zip(brow) {
                            *o += av * bv;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Sums the leading axes of `t` down to `target` (each axis equal or 1).
fn sum_batch_to(t: Tensor, target: Shape) -> Tensor {
    if t.shape() == target {
        return t;
    }
    let idx = broadcast_index(t.shape(), target);
    reduce_to(&t, target, &idx)
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.0].op
    }

    /// First recorded node holding a non-finite value.
    pub fn first_non_finite(&self) -> Option<(Var, &'static str)> {
        self.nodes
            .iter()
            .enumerate()
            .find(|(_, n)| !n.value.is_finite())
            .map(|(i, n)| (Var(i), n.op))
    }

    /// A differentiable leaf.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push_node("leaf", value, true, None)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_node("constant", value, false, None)
    }

    fn push_node(
        &mut self,
        op: &'static str,
        value: Tensor,
        needs_grad: bool,
        pullback: Option<Pullback>,
    ) -> Var {
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
            pullback,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records a custom operation. `pullback` must return cotangents shaped like the
    /// corresponding parents.
    pub fn record(
        &mut self,
        op: &'static str,
        parents: &[Var],
        value: Tensor,
        pullback: Pullback,
    ) -> Var {
        let needs_grad = parents.iter().any(|p| self.nodes[p.0].needs_grad);
        self.push_node(op, value, needs_grad, Some(pullback))
    }

    /// Reverse sweep from `output` seeded with `seed` (shaped like the output).
    pub fn backward(&self, output: Var, seed: Tensor) -> Result<Grads> {
        if seed.shape() != self.value(output).shape() {
            return Err(Error::shape(format!(
                "backward: seed {:?} does not match output {:?}",
                seed.shape(),
                self.value(output).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(seed);
        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(pullback) = &node.pullback else {
                continue;
            };
            let Some(g) = grads[i].take() else { continue };
            for (parent, pg) in pullback(&g) {
                if !self.nodes[parent.0].needs_grad {
                    continue;
                }
                match &mut grads[parent.0] {
                    Some(acc) => acc.add_assign(&pg)?,
                    slot => *slot = Some(pg),
                }
            }
            grads[i] = Some(g);
        }
        Ok(Grads(grads))
    }

    // ---- elementwise ----

    /// `a + b`, where `b` may broadcast along any axis of size 1.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        check_broadcast(sa, sb, "add")?;
        if sa == sb {
            let value = self.value(a).add(self.value(b))?;
            return Ok(self.record(
                "add",
                &[a, b],
                value,
                Box::new(move |g| vec![(a, g.clone()), (b, g.clone())]),
            ));
        }
        let idx = broadcast_index(sa, sb);
        let bd = self.value(b).data();
        let mut value = self.value(a).clone();
        for (v, &i) in value.data_mut().iter_mut().zip(&idx) {
            *v += bd[i];
        }
        Ok(self.record(
            "add",
            &[a, b],
            value,
            Box::new(move |g| vec![(a, g.clone()), (b, reduce_to(g, sb, &idx))]),
        ))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.record(
            "sub",
            &[a, b],
            value,
            Box::new(move |g| vec![(a, g.clone()), (b, g.scale(-1.0))]),
        ))
    }

    /// `a * b` elementwise, where `b` may broadcast along any axis of size 1.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        check_broadcast(sa, sb, "mul")?;
        let idx = broadcast_index(sa, sb);
        let av = self.value(a).clone();
        let bv = self.value(b).clone();
        let mut value = av.clone();
        for (v, &i) in value.data_mut().iter_mut().zip(&idx) {
            *v *= bv.data()[i];
        }
        Ok(self.record(
            "mul",
            &[a, b],
            value,
            Box::new(move |g| {
                let mut ga = g.clone();
                for (v, &i) in ga.data_mut().iter_mut().zip(&idx) {
                    *v *= bv.data()[i];
                }
                let gab = g.mul(&av).expect("shapes fixed at record time");
                vec![(a, ga), (b, reduce_to(&gab, sb, &idx))]
            }),
        ))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).scale(s);
        self.record(
            "scale",
            &[a],
            value,
            Box::new(move |g| vec![(a, g.scale(s))]),
        )
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let x = self.value(a).clone();
        let value = x.map(gelu);
        self.record(
            "gelu",
            &[a],
            value,
            Box::new(move |g| {
                vec![(
                    a,
                    g.zip_map(&x, |gv, xv| gv * gelu_grad(xv))
                        .expect("same shape"),
                )]
            }),
        )
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let y = self.value(a).map(sigmoid);
        let yc = y.clone();
        self.record(
            "sigmoid",
            &[a],
            y,
            Box::new(move |g| {
                vec![(
                    a,
                    g.zip_map(&yc, |gv, s| gv * s * (1.0 - s))
                        .expect("same shape"),
                )]
            }),
        )
    }

    // ---- structure ----

    /// `out[i] = a[index[i]]`; the pullback scatter-adds.
    pub fn gather(&mut self, a: Var, index: Rc<Vec<usize>>, shape: Shape) -> Result<Var> {
        let n: usize = shape.iter().product();
        let src = self.value(a);
        if index.len() != n {
            return Err(Error::shape(format!(
                "gather: {} indices for shape {shape:?}",
                index.len()
            )));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= src.len()) {
            return Err(Error::shape(format!(
                "gather: index {bad} out of range {}",
                src.len()
            )));
        }
        let value = Tensor::from_vec(shape, index.iter().map(|&i| src.data()[i]).collect())?;
        let src_shape = src.shape();
        Ok(self.record(
            "gather",
            &[a],
            value,
            Box::new(move |g| {
                let mut ga = Tensor::zeros(src_shape);
                let d = ga.data_mut();
                for (&i, &v) in index.iter().zip(g.data()) {
                    d[i] += v;
                }
                vec![(a, ga)]
            }),
        ))
    }

    pub fn reshape(&mut self, a: Var, shape: Shape) -> Result<Var> {
        let src_shape = self.value(a).shape();
        let value = self.value(a).clone().reshape(shape)?;
        Ok(self.record(
            "reshape",
            &[a],
            value,
            Box::new(move |g| vec![(a, g.clone().reshape(src_shape).expect("same count"))]),
        ))
    }

    pub fn pixel_shuffle(&mut self, a: Var, r: usize) -> Result<Var> {
        let shape = super::pixel_shuffle_shape(self.value(a).shape(), r)?;
        let idx = super::pixel_shuffle_index(self.value(a).shape(), r)?;
        self.gather(a, Rc::new(idx), shape)
    }

    /// Circular spatial shift, see [`Tensor::roll`].
    pub fn roll(&mut self, a: Var, dy: isize, dx: isize) -> Result<Var> {
        let shape = self.value(a).shape();
        let [b, c, h, w] = shape;
        let mut idx = Vec::with_capacity(b * c * h * w);
        for bi in 0..b {
            for ci in 0..c {
                for y in 0..h {
                    let sy = (y as isize - dy).rem_euclid(h as isize) as usize;
                    for x in 0..w {
                        let sx = (x as isize - dx).rem_euclid(w as isize) as usize;
                        idx.push(((bi * c + ci) * h + sy) * w + sx);
                    }
                }
            }
        }
        self.gather(a, Rc::new(idx), shape)
    }

    // ---- linear algebra ----

    /// Batched `a · b` (or `a · bᵀ`) over the trailing two axes.
    pub fn matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let av = self.value(a).clone();
        let bv = self.value(b).clone();
        let value = matmul_raw(&av, &bv, false, trans_b)?;
        let (sa, sb) = (av.shape(), bv.shape());
        Ok(self.record(
            "matmul",
            &[a, b],
            value,
            Box::new(move |g| {
                let ga = matmul_raw(g, &bv, false, !trans_b).expect("shapes fixed");
                let gb_full = if trans_b {
                    matmul_raw(g, &av, true, false).expect("shapes fixed")
                } else {
                    matmul_raw(&av, g, true, false).expect("shapes fixed")
                };
                debug_assert_eq!(ga.shape(), sa);
                vec![(a, ga), (b, sum_batch_to(gb_full, sb))]
            }),
        ))
    }

    pub fn conv2d(
        &mut self,
        x: Var,
        kernel: Var,
        stride: usize,
        boundary: Boundary,
    ) -> Result<Var> {
        let xv = self.value(x).clone();
        let kv = self.value(kernel).clone();
        let value = conv2d(&xv, &kv, stride, boundary)?;
        Ok(self.record(
            "conv2d",
            &[x, kernel],
            value,
            Box::new(move |g| {
                let gx = conv2d_input_adjoint(g, &kv, xv.shape(), stride, boundary)
                    .expect("shapes fixed");
                let gk =
                    conv2d_kernel_grad(g, &xv, kv.shape(), stride, boundary).expect("shapes fixed");
                vec![(x, gx), (kernel, gk)]
            }),
        ))
    }

    // ---- reductions and normalization ----

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let w = x.shape()[3];
        let mut y = x.clone();
        for row in y.data_mut().chunks_mut(w) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for v in row.iter_mut() {
                *v = (*v - m).exp();
                s += *v;
            }
            for v in row.iter_mut() {
                *v /= s;
            }
        }
        let yc = y.clone();
        self.record(
            "softmax",
            &[a],
            y,
            Box::new(move |g| {
                let mut ga = g.clone();
                for (grow, yrow) in ga.data_mut().chunks_mut(w).zip(yc.data().chunks(w)) {
                    let dot: f64 = grow.iter().zip(yrow).map(|(g, y)| g * y).sum();
                    for (gv, yv) in grow.iter_mut().zip(yrow) {
                        *gv = yv * (*gv - dot);
                    }
                }
                vec![(a, ga)]
            }),
        )
    }

    /// Spatial mean: `(b, c, h, w) -> (b, c, 1, 1)`.
    pub fn mean_hw(&mut self, a: Var) -> Var {
        let [b, c, h, w] = self.value(a).shape();
        let n = (h * w) as f64;
        let value = Tensor::from_vec(
            [b, c, 1, 1],
            self.value(a)
                .data()
                .chunks(h * w)
                .map(|p| p.iter().sum::<f64>() / n)
                .collect(),
        )
        .expect("count matches");
        self.record(
            "mean_hw",
            &[a],
            value,
            Box::new(move |g| {
                let ga = Tensor::from_fn([b, c, h, w], |bi, ci, _, _| g.at(bi, ci, 0, 0) / n);
                vec![(a, ga)]
            }),
        )
    }

    /// Normalizes each row of the last axis to zero mean and unit variance.
    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Var {
        let x = self.value(a);
        let w = x.shape()[3];
        let mut y = x.clone();
        let mut inv_std = Vec::with_capacity(x.len() / w.max(1));
        for row in y.data_mut().chunks_mut(w) {
            let mean = row.iter().sum::<f64>() / w as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w as f64;
            let is = 1.0 / (var + eps).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mean) * is;
            }
            inv_std.push(is);
        }
        let yc = y.clone();
        self.record(
            "layer_norm",
            &[a],
            y,
            Box::new(move |g| {
                let mut ga = g.clone();
                let n = w as f64;
                for ((grow, yrow), is) in ga
                    .data_mut()
                    .chunks_mut(w)
                    .zip(yc.data().chunks(w))
                    .zip(&inv_std)
                {
                    let mg = grow.iter().sum::<f64>() / n;
                    let mgy = grow.iter().zip(yrow).map(|(g, y)| g * y).sum::<f64>() / n;
                    for (gv, yv) in grow.iter_mut().zip(yrow) {
                        *gv = is * (*gv - mg - yv * mgy);
                    }
                }
                vec![(a, ga)]
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::tensor::grad_check;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Checks the gradient of `<f(x), w>` for a random weighting `w`.
    fn check_unary(shape: Shape, seed: u64, f: impl Fn(&mut Graph, Var) -> Var) {
        let mut r = rng(seed);
        let x0 = Tensor::random_uniform(shape, -1.0, 1.0, &mut r);
        let probe = {
            let mut g = Graph::new();
            let v = g.leaf(x0.clone());
            let y = f(&mut g, v);
            Tensor::random_uniform(g.value(y).shape(), -1.0, 1.0, &mut r)
        };
        let err = grad_check(
            |x| {
                let mut g = Graph::new();
                let v = g.leaf(x.clone());
                let y = f(&mut g, v);
                let val = g.value(y).dot(&probe).unwrap();
                let grads = g.backward(y, probe.clone()).unwrap();
                (
                    val,
                    grads
                        .get(v)
                        .cloned()
                        .unwrap_or_else(|| Tensor::zeros(x.shape())),
                )
            },
            &x0,
            1e-5,
        );
        assert!(err < 1e-7, "gradient error {err}");
    }

    /// Adjoint identity `<J u, v> = <u, Jᵀ v>` for an op linear in its input.
    fn check_linear(shape: Shape, seed: u64, f: impl Fn(&mut Graph, Var) -> Var) {
        let mut r = rng(seed);
        let u = Tensor::random_uniform(shape, -1.0, 1.0, &mut r);
        let mut g = Graph::new();
        let x = g.leaf(u.clone());
        let y = f(&mut g, x);
        let v = Tensor::random_uniform(g.value(y).shape(), -1.0, 1.0, &mut r);
        let lhs = g.value(y).dot(&v).unwrap();
        let rhs = u.dot(g.backward(y, v).unwrap().get(x).unwrap()).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0),
            "{lhs} vs {rhs}"
        );
    }

    #[test]
    fn linear_ops_satisfy_adjoint_identity() {
        let mut r = rng(10);
        let k = Tensor::random_uniform([4, 3, 3, 3], -1.0, 1.0, &mut r);
        let m = Tensor::random_uniform([1, 1, 5, 7], -1.0, 1.0, &mut r);
        let bias = Tensor::random_uniform([1, 3, 1, 1], -1.0, 1.0, &mut r);
        check_linear([2, 3, 5, 6], 11, |g, x| {
            let k = g.constant(k.clone());
            g.conv2d(x, k, 1, Boundary::Periodic).unwrap()
        });
        check_linear([1, 3, 6, 6], 12, |g, x| {
            let k = g.constant(k.clone());
            g.conv2d(x, k, 2, Boundary::Zero).unwrap()
        });
        check_linear([2, 8, 3, 2], 13, |g, x| g.pixel_shuffle(x, 2).unwrap());
        check_linear([2, 3, 4, 5], 14, |g, x| g.roll(x, 1, -2).unwrap());
        check_linear([2, 3, 4, 5], 15, |g, x| {
            let m = g.constant(m.clone());
            g.matmul(x, m, false).unwrap()
        });
        let a = Tensor::random_uniform([2, 3, 4, 7], -1.0, 1.0, &mut r);
        check_linear([1, 1, 5, 7], 16, |g, x| {
            let a = g.constant(a.clone());
            g.matmul(a, x, true).unwrap()
        });
        check_linear([2, 3, 4, 5], 17, |g, x| g.mean_hw(x));
        check_linear([2, 3, 4, 5], 18, |g, x| {
            let b = g.constant(bias.clone());
            g.mul(x, b).unwrap()
        });
        check_linear([1, 3, 1, 1], 19, |g, x| {
            let big = g.constant(Tensor::full([2, 3, 4, 5], 0.7));
            g.mul(big, x).unwrap()
        });
    }

    #[test]
    fn nonlinear_ops_match_finite_differences() {
        check_unary([2, 2, 3, 5], 20, |g, x| g.softmax(x));
        check_unary([2, 2, 3, 5], 21, |g, x| g.layer_norm(x, 1e-5));
        check_unary([2, 2, 3, 5], 22, |g, x| g.gelu(x));
        check_unary([2, 2, 3, 5], 23, |g, x| g.sigmoid(x));
        check_unary([2, 2, 3, 5], 24, |g, x| g.mul(x, x).unwrap());
        check_unary([2, 2, 4, 3], 25, |g, x| g.matmul(x, x, true).unwrap());
        check_unary([1, 2, 4, 4], 26, |g, x| {
            let b = g.mean_hw(x);
            let s = g.sigmoid(b);
            g.mul(x, s).unwrap()
        });
    }

    #[test]
    fn broadcast_add_reduces_gradient() {
        let mut g = Graph::new();
        let a = g.leaf(Tensor::zeros([2, 3, 2, 2]));
        let b = g.leaf(Tensor::zeros([1, 3, 1, 1]));
        let y = g.add(a, b).unwrap();
        let grads = g.backward(y, Tensor::full([2, 3, 2, 2], 1.0)).unwrap();
        assert_eq!(grads.get(b).unwrap().data(), &[8.0, 8.0, 8.0]);
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::full([1, 1, 1, 2], 2.0));
        let b = g.leaf(Tensor::full([1, 1, 1, 2], 3.0));
        let y = g.mul(a, b).unwrap();
        let grads = g.backward(y, Tensor::full([1, 1, 1, 2], 1.0)).unwrap();
        assert!(grads.get(a).is_none());
        assert_eq!(grads.get(b).unwrap().data(), &[2.0, 2.0]);
    }

    #[test]
    fn softmax_rows_are_distributions() {
        let mut r = rng(30);
        let mut g = Graph::new();
        let x = g.leaf(Tensor::random_uniform([2, 3, 4, 6], -20.0, 20.0, &mut r));
        let y = g.softmax(x);
        for row in g.value(y).data().chunks(6) {
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
