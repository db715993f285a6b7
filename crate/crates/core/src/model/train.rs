use serde::{Deserialize, Serialize};

use super::{forward_graph, Model, ModelParams};
use crate::error::{Error, Result};
use crate::loss::WaveletLoss;
use crate::params::ParamTree;
use crate::tensor::{Graph, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Steps after which the learning rate is multiplied by `gamma`.
    pub milestones: Vec<usize>,
    pub gamma: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            milestones: vec![125_000, 200_000, 240_000],
            gamma: 0.5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..1.0).contains(&v);
        if !(self.lr >= 0.0 && self.lr.is_finite())
            || !unit(self.beta1)
            || !unit(self.beta2)
            || !(self.eps > 0.0)
        {
            return Err(Error::config(format!(
                "optimizer needs lr >= 0, betas in [0, 1) and eps > 0 (got lr {}, betas {}/{}, eps {})",
                self.lr, self.beta1, self.beta2, self.eps
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::config("gamma must be positive"));
        }
        Ok(())
    }

    /// Learning rate in effect for the given 1-based step.
    pub fn lr_at(&self, step: usize) -> f64 {
        let passed = self.milestones.iter().filter(|&&m| step > m).count();
        self.lr * self.gamma.powi(passed as i32)
    }
}

/// Adam moments for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    pub m: ModelParams,
    pub v: ModelParams,
    /// Number of updates applied so far.
    pub step: usize,
}

impl OptimizerState {
    pub fn new(model: &Model, config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let zeros = model.params.zeros_like();
        Ok(OptimizerState {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        })
    }

    fn apply(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.step += 1;
        let c = &self.config;
        let lr = c.lr_at(self.step);
        let t = self.step as i32;
        let (bc1, bc2) = (1.0 - c.beta1.powi(t), 1.0 - c.beta2.powi(t));
        let mut grad_list = Vec::new();
        grads.visit_tree("", &mut |_, g| grad_list.push(g));
        let items = params
            .tensors_mut()
            .into_iter()
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((p, m), v), g) in items.zip(grad_list) {
            let (p, m, v, g) = (p.data_mut(), m.data_mut(), v.data_mut(), g.data());
            for i in 0..p.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                p[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + c.eps);
            }
        }
    }
}

/// Loss of `model(lr)` against `hr` and its gradient with respect to every parameter.
pub fn loss_and_grad(
    model: &Model,
    lr: &Tensor,
    hr: &Tensor,
    loss: &WaveletLoss,
) -> Result<(f64, ModelParams)> {
    let mut g = Graph::new();
    let x = g.constant(lr.clone());
    let p = model.params.map(&mut |t| g.leaf(t.clone()));
    let sr = forward_graph(&mut g, model, &p, x)?;
    let (value, seed) = loss.value_and_grad(g.value(sr), hr)?;
    if !value.is_finite() || !seed.is_finite() {
        let culprit = match g.first_non_finite() {
            Some((var, op)) => format!("first non-finite tensor is node {} ({op})", var.index()),
            None => "all activations are finite; the loss itself is not".to_string(),
        };
        return Err(Error::NonFinite(format!("loss {value}; {culprit}")));
    }
    let mut grads = g.backward(sr, seed)?;
    let grads = p.map(&mut |v| {
        grads
            .take(*v)
            .unwrap_or_else(|| Tensor::zeros(g.value(*v).shape()))
    });
    Ok((value, grads))
}

/// One Adam step on the `(lr, hr)` batch. Returns the loss before the update.
pub fn train_step(
    model: &mut Model,
    lr: &Tensor,
    hr: &Tensor,
    opt: &mut OptimizerState,
    loss: &WaveletLoss,
) -> Result<f64> {
    let (value, grads) = loss_and_grad(model, lr, hr, loss)?;
    opt.apply(&mut model.params, &grads);
    Ok(value)
}
