//! Clipped-surrogate PPO over one episode buffer.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::buffer::Buffer;
use super::policy::log_softmax;
use super::AgentError;
use crate::encoder::{GamaModel, ParamStore, Tensor};
use crate::rng::Rng;
use crate::state::{DistanceGraph, RemainingCapacity, SearchState};
use crate::vrp::Instance;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub lr: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Global gradient-norm cap (none when absent).
    pub max_grad_norm: Option<f64>,
    /// Discount applied from one phase's return to the previous one. Absent
    /// means every phase's return is its own reward.
    pub phase_discount: Option<f64>,
    /// Subtract the value estimate from the return; when off the value head
    /// is not trained and advantages are raw returns.
    pub value_baseline: bool,
    /// Divide rewards by the episode's initial cost.
    pub normalize_rewards: bool,
    pub optimizer: OptimizerKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            lr: 3e-4,
            clip: 0.2,
            epochs: 4,
            minibatch: 64,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: Some(0.5),
            phase_discount: None,
            value_baseline: true,
            normalize_rewards: true,
            optimizer: OptimizerKind::Adam,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |field: &str, why: &str| Err(AgentError::Config(format!("ppo.{field} {why}")));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr", "must be positive");
        }
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip", "must lie in (0, 1)");
        }
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if self.minibatch == 0 {
            return bad("minibatch", "must be at least 1");
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 {
            return bad("value_coef/entropy_coef", "must be non-negative");
        }
        if self.max_grad_norm.is_some_and(|g| g <= 0.0) {
            return bad("max_grad_norm", "must be positive");
        }
        if self.phase_discount.is_some_and(|g| !(0.0..=1.0).contains(&g)) {
            return bad("phase_discount", "must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || self.adam_eps <= 0.0 {
            return bad("adam_*", "out of range");
        }
        Ok(())
    }
}

/// Adam or plain SGD over a parameter store. Moments are kept in 64 bits.
#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(cfg: &PpoConfig, params: &ParamStore<f32>) -> Self {
        let zeros: Vec<Vec<f64>> = params.ids().map(|id| vec![0.0; params.get(id).len()]).collect();
        Optimizer {
            kind: cfg.optimizer,
            lr: cfg.lr,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, params: &mut ParamStore<f32>, grads: &[Tensor<f64>]) {
        self.t += 1;
        let ids: Vec<_> = params.ids().collect();
        for (k, id) in ids.into_iter().enumerate() {
            let g = grads[k].data();
            let p = params.get_mut(id).data_mut();
            match self.kind {
                OptimizerKind::Sgd => {
                    for (w, &gi) in p.iter_mut().zip(g) {
                        *w = (*w as f64 - self.lr * gi) as f32;
                    }
                }
                OptimizerKind::Adam => {
                    let (b1, b2) = (self.beta1, self.beta2);
                    let c1 = 1.0 - b1.powi(self.t);
                    let c2 = 1.0 - b2.powi(self.t);
                    let (m, v) = (&mut self.m[k], &mut self.v[k]);
                    for i in 0..p.len() {
                        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                        let step = self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
                        p[i] = (p[i] as f64 - step) as f32;
                    }
                }
            }
        }
    }
}

/// Instance-level data needed to rebuild the states of a buffer.
pub struct PpoContext<'a> {
    pub inst: &'a Instance,
    pub dis: Arc<DistanceGraph>,
    pub initial_cost: f64,
    pub remaining_capacity: RemainingCapacity,
}

/// Means over every sample of every minibatch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Mean of (old log-prob − new log-prob).
    pub kl: f64,
    pub clip_fraction: f64,
    /// Mean pre-clipping gradient norm per update.
    pub grad_norm: f64,
    pub updates: usize,
}

struct SampleResult {
    grads: Vec<Tensor<f32>>,
    policy_loss: f64,
    value_loss: f64,
    entropy: f64,
    kl: f64,
    clipped: bool,
}

/// Per-transition returns and advantages (before any value subtraction).
pub fn phase_returns(buffer: &Buffer, cfg: &PpoConfig, initial_cost: f64) -> Result<Vec<f64>, AgentError> {
    let scale = if cfg.normalize_rewards && initial_cost > 0.0 { initial_cost } else { 1.0 };
    let rewards = buffer.phase_rewards();
    let mut phase_ret = vec![0.0; rewards.len()];
    let mut next = 0.0;
    for k in (0..rewards.len()).rev() {
        let r = rewards[k].ok_or_else(|| AgentError::InvalidState(format!("phase {k} has no reward")))? / scale;
        phase_ret[k] = match cfg.phase_discount {
            Some(g) => r + g * next,
            None => r,
        };
        next = phase_ret[k];
    }
    Ok(buffer.transitions().iter().map(|t| phase_ret[t.phase_id]).collect())
}

fn sample_gradient(
    model: &GamaModel<f32>,
    ctx: &PpoContext<'_>,
    cfg: &PpoConfig,
    t: &super::buffer::Transition,
    ret: f64,
) -> Result<SampleResult, AgentError> {
    let state = SearchState::build(
        ctx.inst,
        Arc::clone(&ctx.dis),
        &t.solution,
        t.opt,
        ctx.initial_cost,
        ctx.remaining_capacity,
    );
    let input = model.prepare(&state)?;
    let mut tape = model.new_tape();
    let out = model.forward(&mut tape, &input)?;
    let logits = tape.value(out.logits).to_f64_vec();
    let value = tape.value(out.value).to_f64_vec()[0];
    let lp = log_softmax(&logits);
    let probs: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    let entropy = -probs.iter().zip(&lp).map(|(p, l)| p * l).sum::<f64>();

    let adv = if cfg.value_baseline { ret - t.value } else { ret };
    let ratio = (lp[t.action] - t.log_prob).exp();
    let clipped_ratio = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
    let (surr, surr_clipped) = (ratio * adv, clipped_ratio * adv);
    let policy_loss = -surr.min(surr_clipped);
    let unclipped = surr <= surr_clipped;

    let mut g_logits = vec![0.0; logits.len()];
    for (j, g) in g_logits.iter_mut().enumerate() {
        let onehot = if j == t.action { 1.0 } else { 0.0 };
        if unclipped {
            *g -= adv * ratio * (onehot - probs[j]);
        }
        *g += cfg.entropy_coef * probs[j] * (lp[j] + entropy);
    }
    let (value_loss, g_value) = if cfg.value_baseline {
        ((value - ret).powi(2), 2.0 * cfg.value_coef * (value - ret))
    } else {
        (0.0, 0.0)
    };
    let grads = tape.backward(&[
        (out.logits, Tensor::from_f64(1, logits.len(), &g_logits)?),
        (out.value, Tensor::from_f64(1, 1, &[g_value])?),
    ]);
    Ok(SampleResult {
        grads,
        policy_loss,
        value_loss,
        entropy,
        kl: t.log_prob - lp[t.action],
        clipped: (ratio - 1.0).abs() > cfg.clip,
    })
}

/// `cfg.epochs` passes over the buffer in shuffled minibatches. Per-sample
/// gradients are computed in parallel and summed in buffer order.
pub fn ppo_update(
    model: &mut GamaModel<f32>,
    optimizer: &mut Optimizer,
    buffer: &Buffer,
    ctx: &PpoContext<'_>,
    cfg: &PpoConfig,
    rng: &mut Rng,
) -> Result<PpoStats, AgentError> {
    if buffer.is_empty() {
        return Err(AgentError::InvalidState("ppo update on an empty buffer".into()));
    }
    let returns = phase_returns(buffer, cfg, ctx.initial_cost)?;
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    let mut stats = PpoStats::default();
    let mut samples = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.minibatch) {
            let results: Vec<SampleResult> = {
                let m: &GamaModel<f32> = model;
                batch
                    .par_iter()
                    .map(|&i| sample_gradient(m, ctx, cfg, &buffer.transitions()[i], returns[i]))
                    .collect::<Result<_, _>>()?
            };
            let mut total: Vec<Tensor<f64>> = model
                .params()
                .ids()
                .map(|id| {
                    let t = model.params().get(id);
                    Tensor::zeros(t.rows(), t.cols())
                })
                .collect();
            for r in &results {
                for (acc, g) in total.iter_mut().zip(&r.grads) {
                    for (a, &x) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += x as f64;
                    }
                }
                stats.policy_loss += r.policy_loss;
                stats.value_loss += r.value_loss;
                stats.entropy += r.entropy;
                stats.kl += r.kl;
                stats.clip_fraction += if r.clipped { 1.0 } else { 0.0 };
            }
            samples += results.len();
            let inv = 1.0 / batch.len() as f64;
            let mut sq = 0.0;
            for t in &mut total {
                for x in t.data_mut() {
                    *x *= inv;
                    sq += *x * *x;
                }
            }
            let norm = sq.sqrt();
            stats.grad_norm += norm;
            if let Some(cap) = cfg.max_grad_norm {
                if norm > cap {
                    let s = cap / norm;
                    for t in &mut total {
                        for x in t.data_mut() {
                            *x *= s;
                        }
                    }
                }
            }
            optimizer.step(model.params_mut(), &total);
            stats.updates += 1;
        }
    }
    let n = samples as f64;
    stats.policy_loss /= n;
    stats.value_loss /= n;
    stats.entropy /= n;
    stats.kl /= n;
    stats.clip_fraction /= n;
    stats.grad_norm /= stats.updates as f64;
    Ok(stats)
}
