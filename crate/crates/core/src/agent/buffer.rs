//! Experience buffer with phase-shared rewards.

use super::AgentError;
use crate::state::OptFeatures;
use crate::vrp::Solution;

/// One step of experience. The state is kept as the solution and history
/// scalars it was built from, so it can be re-encoded under new parameters.
#[derive(Clone, Debug)]
pub struct Transition {
    pub solution: Solution,
    pub opt: OptFeatures,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub phase_id: usize,
    /// Set when the phase closes.
    pub reward: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct Buffer {
    transitions: Vec<Transition>,
}

impl Buffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }

    pub fn phase_count(&self) -> usize {
        self.transitions.last().map_or(0, |t| t.phase_id + 1)
    }

    pub fn all_rewarded(&self) -> bool {
        self.transitions.iter().all(|t| t.reward.is_some())
    }

    /// Reward of each phase, in phase order (`None` while a phase is open).
    pub fn phase_rewards(&self) -> Vec<Option<f64>> {
        let mut out = vec![None; self.phase_count()];
        for t in &self.transitions {
            out[t.phase_id] = t.reward;
        }
        out
    }
}

/// Gives every transition of phase `phase_id` the reward
/// `f_phase_start − f_phase_best` and returns it.
pub fn assign_phase_rewards(
    buffer: &mut Buffer,
    phase_id: usize,
    f_phase_start: f64,
    f_phase_best: f64,
) -> Result<f64, AgentError> {
    let reward = f_phase_start - f_phase_best;
    if reward < 0.0 || !reward.is_finite() {
        return Err(AgentError::Internal(format!(
            "phase {phase_id}: best cost {f_phase_best} above start cost {f_phase_start}"
        )));
    }
    let mut hit = false;
    for t in buffer.transitions.iter_mut().filter(|t| t.phase_id == phase_id) {
        t.reward = Some(reward);
        hit = true;
    }
    if !hit {
        return Err(AgentError::Internal(format!("no transitions in phase {phase_id}")));
    }
    Ok(reward)
}
