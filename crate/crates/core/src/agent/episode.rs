//! One search episode: encode, select, local search, shake on stagnation.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::buffer::{assign_phase_rewards, Buffer, Transition};
use super::policy::{OperatorPolicy, SampleMode, StepContext};
use super::AgentError;
use crate::neighborhood::{local_search, ActionSet, Perturbation};
use crate::rng::stream_rng;
use crate::state::{build_distance_graph, update_opt_features, OptFeatures, RemainingCapacity, SearchState};
use crate::vrp::{Instance, Solution};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    /// Step budget T.
    pub steps: usize,
    /// Stagnation threshold L: shake after this many steps without a new
    /// incumbent.
    pub no_improve_limit: usize,
    pub mode: SampleMode,
    pub remaining_capacity: RemainingCapacity,
    /// Keep a [`StepRecord`] per step.
    pub record_steps: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            steps: 20_000,
            no_improve_limit: 6,
            mode: SampleMode::Sample,
            remaining_capacity: RemainingCapacity::AfterService,
            record_steps: false,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.steps == 0 {
            return Err(AgentError::Config("search.steps must be at least 1".into()));
        }
        if self.no_improve_limit == 0 {
            return Err(AgentError::Config("search.no_improve_limit must be at least 1".into()));
        }
        Ok(())
    }
}

/// What happened at one step (1-based `step`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: usize,
    pub log_prob: f64,
    pub cost_before: f64,
    pub cost_after: f64,
    pub best_cost: f64,
    pub no_improve: usize,
    pub phase: usize,
    /// Reward of `phase` when this step closed it.
    pub phase_reward: Option<f64>,
    /// Cost after the shake, when one was applied after this step.
    pub shaken_cost: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeStats {
    pub instance: String,
    pub initial_cost: f64,
    pub best_cost: f64,
    /// Current cost after each step's local search.
    pub cost_trace: Vec<f64>,
    pub shakes: usize,
    pub phases: usize,
    pub phase_rewards: Vec<f64>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub best: Solution,
    pub buffer: Buffer,
    pub stats: EpisodeStats,
    pub steps: Vec<StepRecord>,
}

/// Runs `cfg.steps` policy-guided local-search steps from `initial`.
///
/// The policy draws from the stream `(seed, 1)` and the perturbation from
/// `(seed, 2)`, so two policies run with the same seed see the same shake
/// randomness for as long as their trajectories agree.
pub fn run_episode(
    inst: &Instance,
    initial: Solution,
    actions: &ActionSet,
    policy: &mut dyn OperatorPolicy,
    perturbation: &mut dyn Perturbation,
    cfg: &EpisodeConfig,
    seed: u64,
) -> Result<EpisodeResult, AgentError> {
    cfg.validate()?;
    if policy.action_count() != actions.len() {
        return Err(AgentError::Config(format!(
            "policy `{}` covers {} actions, action set has {}",
            policy.name(),
            policy.action_count(),
            actions.len()
        )));
    }
    let started = Instant::now();
    let mut policy_rng = stream_rng(seed, &[1]);
    let mut shake_rng = stream_rng(seed, &[2]);
    let tol = inst.convention().improvement_tolerance();
    let dis = policy.needs_state().then(|| Arc::new(build_distance_graph(inst)));

    let initial_cost = initial.cost();
    let mut cur = initial;
    let mut best = cur.clone();
    let mut opt = OptFeatures::default();
    let mut buffer = Buffer::new();
    let mut steps = Vec::new();
    let mut cost_trace = Vec::with_capacity(cfg.steps);
    let mut phase_rewards = Vec::new();
    let (mut phase, mut no_improve, mut shakes) = (0usize, 0usize, 0usize);
    let mut phase_start = cur.cost();
    let mut phase_best = phase_start;

    for t in 0..cfg.steps {
        let f_before = cur.cost();
        let state = dis.as_ref().map(|d| {
            SearchState::build(inst, Arc::clone(d), &cur, opt, initial_cost, cfg.remaining_capacity)
        });
        let decision = policy.select(
            &StepContext {
                state: state.as_ref(),
                step: t,
            },
            &mut policy_rng,
            cfg.mode,
        )?;
        if decision.action >= actions.len() {
            return Err(AgentError::Internal(format!(
                "policy chose action {} of {}",
                decision.action,
                actions.len()
            )));
        }
        let next = local_search(inst, &cur, actions.get(decision.action));
        let f_after = next.cost();
        buffer.push(Transition {
            solution: cur,
            opt,
            action: decision.action,
            log_prob: decision.log_prob,
            value: decision.value,
            phase_id: phase,
            reward: None,
        });
        if f_after < best.cost() - tol {
            best = next.clone();
            no_improve = 0;
        } else {
            no_improve += 1;
        }
        phase_best = phase_best.min(f_after);
        opt = update_opt_features(&opt, decision.action, f_before, f_after, best.cost());
        cur = next;
        cost_trace.push(f_after);

        let mut record = StepRecord {
            step: t + 1,
            action: decision.action,
            log_prob: decision.log_prob,
            cost_before: f_before,
            cost_after: f_after,
            best_cost: best.cost(),
            no_improve,
            phase,
            phase_reward: None,
            shaken_cost: None,
        };
        if no_improve >= cfg.no_improve_limit {
            let r = assign_phase_rewards(&mut buffer, phase, phase_start, phase_best)?;
            phase_rewards.push(r);
            record.phase_reward = Some(r);
            cur = perturbation.perturb(inst, &cur, actions, &mut shake_rng);
            record.shaken_cost = Some(cur.cost());
            shakes += 1;
            phase += 1;
            no_improve = 0;
            phase_start = cur.cost();
            phase_best = phase_start;
            opt.gap = cur.cost() - best.cost().min(cur.cost());
        }
        if cfg.record_steps {
            steps.push(record);
        }
    }
    if buffer.transitions().last().is_some_and(|t| t.phase_id == phase) {
        let r = assign_phase_rewards(&mut buffer, phase, phase_start, phase_best)?;
        phase_rewards.push(r);
        if let Some(last) = steps.last_mut() {
            last.phase_reward = Some(r);
        }
    }

    let stats = EpisodeStats {
        instance: inst.name().to_string(),
        initial_cost,
        best_cost: best.cost(),
        cost_trace,
        shakes,
        phases: buffer.phase_count(),
        phase_rewards,
        wall_ms: started.elapsed().as_millis() as u64,
    };
    Ok(EpisodeResult {
        best,
        buffer,
        stats,
        steps,
    })
}
