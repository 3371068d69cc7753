//! Policy evaluation over an instance set, parallel across instances and runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{run_episode, EpisodeConfig};
use super::policy::OperatorPolicy;
use super::AgentError;
use crate::neighborhood::{ActionSet, RandomShake};
use crate::rng::derive_seed;
use crate::vrp::{initial_solution, Instance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Independent runs per instance.
    pub runs: usize,
    pub seed: u64,
    /// Worker cap; all available cores when absent.
    pub threads: Option<usize>,
    pub shake_strength: usize,
    /// Fill `time_ms` with measured wall time.
    pub record_wall_time: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            runs: 1,
            seed: 0,
            threads: None,
            shake_strength: 1,
            record_wall_time: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvalInstance {
    pub id: String,
    pub instance: Instance,
    pub reference_cost: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub run: usize,
    pub initial_cost: f64,
    pub best_cost: f64,
    pub time_ms: Option<u64>,
    pub gap_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub instance_id: String,
    /// Best over runs.
    pub best: f64,
    /// Mean over runs.
    pub avg: f64,
    pub gap_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalSummary {
    pub instances: usize,
    pub runs: usize,
    /// Mean best cost over instances, each averaged over its runs.
    pub mean: f64,
    /// Mean over instances of the best run.
    pub best: f64,
    /// Population standard deviation of all per-run best costs.
    pub std: f64,
    pub mean_gap_pct: Option<f64>,
    pub per_instance: Vec<InstanceSummary>,
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    /// Ordered by instance, then run.
    pub records: Vec<EvalRecord>,
    pub summary: EvalSummary,
}

pub fn gap_pct(cost: f64, reference: f64) -> f64 {
    (cost - reference) / reference * 100.0
}

/// Seed of run `run` on instance `index`; the initial solution is built from
/// `derive_seed(run_seed, [0])`.
pub fn run_seed(seed: u64, index: usize, run: usize) -> u64 {
    derive_seed(seed, &[index as u64, run as u64])
}

pub type PolicyFactory<'a> = dyn Fn() -> Result<Box<dyn OperatorPolicy>, AgentError> + Sync + 'a;

/// Runs `cfg.runs` episodes per instance without learning.
pub fn evaluate(
    instances: &[EvalInstance],
    actions: &ActionSet,
    policy: &PolicyFactory<'_>,
    episode: &EpisodeConfig,
    cfg: &EvalConfig,
) -> Result<EvalReport, AgentError> {
    if cfg.runs == 0 {
        return Err(AgentError::Config("eval.runs must be at least 1".into()));
    }
    if instances.is_empty() {
        return Err(AgentError::Config("no instances to evaluate".into()));
    }
    episode.validate()?;
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..cfg.runs).map(move |r| (i, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(i, run)| {
                let item = &instances[i];
                let seed = run_seed(cfg.seed, i, run);
                let initial = initial_solution(&item.instance, derive_seed(seed, &[0]));
                let mut p = policy()?;
                let mut shake = RandomShake {
                    strength: cfg.shake_strength,
                };
                let res = run_episode(&item.instance, initial, actions, p.as_mut(), &mut shake, episode, seed)?;
                Ok(EvalRecord {
                    instance_id: item.id.clone(),
                    run,
                    initial_cost: res.stats.initial_cost,
                    best_cost: res.stats.best_cost,
                    time_ms: cfg.record_wall_time.then_some(res.stats.wall_ms),
                    gap_pct: item.reference_cost.map(|r| gap_pct(res.stats.best_cost, r)),
                })
            })
            .collect::<Result<Vec<_>, AgentError>>()
    };
    let records = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AgentError::Internal(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let summary = summarize(instances, &records, cfg.runs);
    Ok(EvalReport { records, summary })
}

fn summarize(instances: &[EvalInstance], records: &[EvalRecord], runs: usize) -> EvalSummary {
    let per_instance: Vec<InstanceSummary> = instances
        .iter()
        .zip(records.chunks(runs))
        .map(|(item, rs)| {
            let best = rs.iter().map(|r| r.best_cost).fold(f64::INFINITY, f64::min);
            InstanceSummary {
                instance_id: item.id.clone(),
                best,
                avg: rs.iter().map(|r| r.best_cost).sum::<f64>() / rs.len() as f64,
                gap_pct: item.reference_cost.map(|r| gap_pct(best, r)),
            }
        })
        .collect();
    let n = per_instance.len() as f64;
    let mean = per_instance.iter().map(|s| s.avg).sum::<f64>() / n;
    let all_mean = records.iter().map(|r| r.best_cost).sum::<f64>() / records.len() as f64;
    let var = records.iter().map(|r| (r.best_cost - all_mean).powi(2)).sum::<f64>() / records.len() as f64;
    let gaps: Vec<f64> = records.iter().filter_map(|r| r.gap_pct).collect();
    EvalSummary {
        instances: per_instance.len(),
        runs,
        mean,
        best: per_instance.iter().map(|s| s.best).sum::<f64>() / n,
        std: var.sqrt(),
        mean_gap_pct: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
        per_instance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_of_reference_is_zero() {
        assert_eq!(gap_pct(375.0, 375.0), 0.0);
        assert!((gap_pct(412.5, 375.0) - 10.0).abs() < 1e-12);
    }
}
