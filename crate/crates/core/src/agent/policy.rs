//! Operator-selection policies.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::encoder::GamaModel;
use crate::rng::Rng;
use crate::state::SearchState;

/// Action distribution and value estimate for one state.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub value: f64,
}

impl PolicyOutput {
    pub fn from_logits(logits: Vec<f64>, value: f64) -> Result<Self, AgentError> {
        if logits.is_empty() {
            return Err(AgentError::InvalidState("empty logits".into()));
        }
        if !logits.iter().all(|l| l.is_finite()) || !value.is_finite() {
            return Err(AgentError::InvalidState(format!("non-finite policy output {logits:?}")));
        }
        let probs = softmax(&logits);
        Ok(PolicyOutput { logits, probs, value })
    }

    pub fn uniform(actions: usize) -> Self {
        PolicyOutput {
            logits: vec![0.0; actions],
            probs: vec![1.0 / actions as f64; actions],
            value: 0.0,
        }
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        log_softmax(&self.logits)[action]
    }

    pub fn entropy(&self) -> f64 {
        let lp = log_softmax(&self.logits);
        -self.probs.iter().zip(&lp).map(|(p, l)| p * l).sum::<f64>()
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z = logits.iter().map(|l| (l - top).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - top - z).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    #[default]
    Sample,
    Greedy,
}

impl FromStr for SampleMode {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sample" => Ok(SampleMode::Sample),
            "greedy" => Ok(SampleMode::Greedy),
            other => Err(AgentError::Config(format!("unknown mode `{other}` (expected sample or greedy)"))),
        }
    }
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleMode::Sample => "sample",
            SampleMode::Greedy => "greedy",
        })
    }
}

/// Draws from `out.probs` (or takes the first argmax) and returns the action
/// with its log probability.
pub fn sample_action(out: &PolicyOutput, rng: &mut Rng, mode: SampleMode) -> (usize, f64) {
    let action = match mode {
        SampleMode::Greedy => {
            let mut best = 0;
            for (i, &p) in out.probs.iter().enumerate() {
                if p > out.probs[best] {
                    best = i;
                }
            }
            best
        }
        SampleMode::Sample => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &p) in out.probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = Some(i);
                    break;
                }
            }
            chosen.unwrap_or_else(|| out.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0))
        }
    };
    (action, out.log_prob(action))
}

/// Information available to a policy at one step.
pub struct StepContext<'a> {
    /// Present when [`OperatorPolicy::needs_state`] is true.
    pub state: Option<&'a SearchState>,
    /// Zero-based step index within the episode.
    pub step: usize,
}

/// One action choice.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    /// Full distribution, when the policy has one.
    pub output: Option<PolicyOutput>,
}

pub trait OperatorPolicy: Send {
    fn name(&self) -> &'static str;
    fn action_count(&self) -> usize;

    fn needs_state(&self) -> bool {
        false
    }

    fn select(&mut self, ctx: &StepContext<'_>, rng: &mut Rng, mode: SampleMode) -> Result<Decision, AgentError>;
}

/// The learned policy: encoder, policy head and value head.
pub struct GamaPolicy {
    model: Arc<GamaModel<f32>>,
}

impl GamaPolicy {
    pub fn new(model: Arc<GamaModel<f32>>) -> Self {
        GamaPolicy { model }
    }

    pub fn output(&self, state: &SearchState) -> Result<PolicyOutput, AgentError> {
        let (_, logits, value) = self.model.evaluate(state)?;
        PolicyOutput::from_logits(logits, value)
    }
}

impl OperatorPolicy for GamaPolicy {
    fn name(&self) -> &'static str {
        "gama"
    }

    fn action_count(&self) -> usize {
        self.model.config().action_count
    }

    fn needs_state(&self) -> bool {
        true
    }

    fn select(&mut self, ctx: &StepContext<'_>, rng: &mut Rng, mode: SampleMode) -> Result<Decision, AgentError> {
        let state = ctx
            .state
            .ok_or_else(|| AgentError::InvalidState("gama policy called without a state".into()))?;
        let out = self.output(state)?;
        let (action, log_prob) = sample_action(&out, rng, mode);
        Ok(Decision {
            action,
            log_prob,
            value: out.value,
            output: Some(out),
        })
    }
}

/// Uniform choice over all actions. Always samples, whatever the mode.
pub struct RandomPolicy {
    actions: usize,
}

impl RandomPolicy {
    pub fn new(actions: usize) -> Self {
        RandomPolicy { actions }
    }
}

impl OperatorPolicy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn action_count(&self) -> usize {
        self.actions
    }

    fn select(&mut self, _ctx: &StepContext<'_>, rng: &mut Rng, _mode: SampleMode) -> Result<Decision, AgentError> {
        let out = PolicyOutput::uniform(self.actions);
        let (action, log_prob) = sample_action(&out, rng, SampleMode::Sample);
        Ok(Decision {
            action,
            log_prob,
            value: 0.0,
            output: Some(out),
        })
    }
}

/// Cycles through a fixed list of action indices.
pub struct FixedSequencePolicy {
    actions: usize,
    sequence: Vec<usize>,
}

impl FixedSequencePolicy {
    pub fn new(actions: usize, sequence: Vec<usize>) -> Result<Self, AgentError> {
        if sequence.is_empty() {
            return Err(AgentError::Config("fixed sequence is empty".into()));
        }
        if let Some(&bad) = sequence.iter().find(|&&a| a >= actions) {
            return Err(AgentError::Config(format!("sequence action {bad} outside {actions} actions")));
        }
        Ok(FixedSequencePolicy { actions, sequence })
    }
}

impl OperatorPolicy for FixedSequencePolicy {
    fn name(&self) -> &'static str {
        "fixed-sequence"
    }

    fn action_count(&self) -> usize {
        self.actions
    }

    fn select(&mut self, ctx: &StepContext<'_>, _rng: &mut Rng, _mode: SampleMode) -> Result<Decision, AgentError> {
        Ok(Decision {
            action: self.sequence[ctx.step % self.sequence.len()],
            log_prob: 0.0,
            value: 0.0,
            output: None,
        })
    }
}

/// What a policy constructor may use.
pub struct PolicyArgs {
    pub actions: usize,
    pub model: Option<Arc<GamaModel<f32>>>,
    pub sequence: Vec<usize>,
}

type PolicyCtor = fn(&PolicyArgs) -> Result<Box<dyn OperatorPolicy>, AgentError>;

/// Policies by name.
pub struct PolicyRegistry {
    ctors: BTreeMap<&'static str, PolicyCtor>,
}

impl PolicyRegistry {
    pub fn standard() -> &'static PolicyRegistry {
        static REG: OnceLock<PolicyRegistry> = OnceLock::new();
        REG.get_or_init(|| {
            let mut ctors: BTreeMap<&'static str, PolicyCtor> = BTreeMap::new();
            ctors.insert("gama", |a| {
                let model = a
                    .model
                    .clone()
                    .ok_or_else(|| AgentError::Config("gama policy needs a model".into()))?;
                if model.config().action_count != a.actions {
                    return Err(AgentError::Config(format!(
                        "model has {} actions, action set has {}",
                        model.config().action_count,
                        a.actions
                    )));
                }
                Ok(Box::new(GamaPolicy::new(model)))
            });
            ctors.insert("random", |a| Ok(Box::new(RandomPolicy::new(a.actions))));
            ctors.insert("fixed-sequence", |a| {
                Ok(Box::new(FixedSequencePolicy::new(a.actions, a.sequence.clone())?))
            });
            PolicyRegistry { ctors }
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.ctors.keys().copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ctors.contains_key(name)
    }

    pub fn build(&self, name: &str, args: &PolicyArgs) -> Result<Box<dyn OperatorPolicy>, AgentError> {
        let ctor = self.ctors.get(name).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            AgentError::Config(format!("unknown policy `{name}` (known: {})", known.join(", ")))
        })?;
        ctor(args)
    }
}
