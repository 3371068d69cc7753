//! The training loop.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use super::episode::{run_episode, EpisodeConfig};
use super::policy::{PolicyArgs, PolicyRegistry};
use super::ppo::{ppo_update, Optimizer, PpoConfig, PpoContext, PpoStats};
use super::AgentError;
use crate::dataset::SeededInstance;
use crate::encoder::{save_checkpoint, EncoderConfig, GamaModel};
use crate::neighborhood::{ActionSet, OperatorId, RandomShake};
use crate::rng::{derive_seed, stream_rng};
use crate::state::build_distance_graph;
use crate::vrp::{generate_instance, initial_solution, Instance, SizeClass};

/// Where episode instances come from.
#[derive(Clone, Debug)]
pub enum InstanceSource {
    /// A fresh instance per episode.
    Generated { customers: usize, size_class: SizeClass },
    /// Cycled in order.
    Dataset(Vec<SeededInstance>),
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub episodes: usize,
    pub source: InstanceSource,
    pub actions: Vec<OperatorId>,
    pub encoder: EncoderConfig,
    pub episode: EpisodeConfig,
    pub ppo: PpoConfig,
    /// Registered policy name; only `gama` learns.
    pub policy: String,
    /// Action indices for the `fixed-sequence` policy.
    pub sequence: Vec<usize>,
    pub shake_strength: usize,
    pub master_seed: u64,
    /// Write measured wall time into the log (makes logs run-dependent).
    pub record_wall_time: bool,
    /// Also write the checkpoint every this many episodes.
    pub checkpoint_every: Option<usize>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<ActionSet, AgentError> {
        if self.episodes == 0 {
            return Err(AgentError::Config("train.episodes must be at least 1".into()));
        }
        if self.shake_strength == 0 {
            return Err(AgentError::Config("search.shake_strength must be at least 1".into()));
        }
        if self.checkpoint_every == Some(0) {
            return Err(AgentError::Config("train.checkpoint_every must be at least 1".into()));
        }
        match &self.source {
            InstanceSource::Generated { customers: 0, .. } => {
                return Err(AgentError::Config("instances.customers must be at least 1".into()))
            }
            InstanceSource::Dataset(d) if d.is_empty() => {
                return Err(AgentError::Config("training dataset is empty".into()))
            }
            _ => {}
        }
        if !PolicyRegistry::standard().contains(&self.policy) {
            let known: Vec<_> = PolicyRegistry::standard().names().collect();
            return Err(AgentError::Config(format!(
                "train.policy `{}` unknown (known: {})",
                self.policy,
                known.join(", ")
            )));
        }
        self.episode.validate()?;
        self.ppo.validate()?;
        self.encoder
            .validate()
            .map_err(|e| AgentError::Config(format!("encoder: {e}")))?;
        let actions = ActionSet::new(&self.actions).map_err(|e| AgentError::Config(format!("search.operators: {e}")))?;
        if self.encoder.action_count != actions.len() {
            return Err(AgentError::Config(format!(
                "encoder.action_count is {} but search.operators lists {}",
                self.encoder.action_count,
                actions.len()
            )));
        }
        Ok(actions)
    }

    fn instance(&self, episode: usize) -> Result<(u64, Instance), AgentError> {
        Ok(match &self.source {
            InstanceSource::Generated { customers, size_class } => {
                let seed = derive_seed(self.master_seed, &[2, episode as u64]);
                (seed, generate_instance(*customers, *size_class, seed)?)
            }
            InstanceSource::Dataset(d) => {
                let item = &d[episode % d.len()];
                (item.seed, item.instance.clone())
            }
        })
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainLogRecord {
    pub episode: usize,
    pub instance_seed: u64,
    pub initial_cost: f64,
    pub best_cost: f64,
    pub phases: usize,
    pub shakes: usize,
    pub policy_loss: Option<f64>,
    pub value_loss: Option<f64>,
    pub kl: Option<f64>,
    pub wall_ms: Option<u64>,
}

pub struct TrainOutcome {
    /// The trained model, for learning policies.
    pub model: Option<GamaModel<f32>>,
    pub log: Vec<TrainLogRecord>,
}

/// Destination of the checkpoint and the metadata stored in it.
pub struct CheckpointTarget<'a> {
    pub path: &'a Path,
    pub metadata: &'a str,
}

/// Runs `cfg.episodes` episodes, updating the policy after each one, and
/// writes one JSON line per episode to `log`.
pub fn train(
    cfg: &TrainConfig,
    log: &mut dyn Write,
    checkpoint: Option<&CheckpointTarget<'_>>,
) -> Result<TrainOutcome, AgentError> {
    let actions = cfg.validate()?;
    let learns = cfg.policy == "gama";
    let mut model = learns
        .then(|| GamaModel::<f32>::new(cfg.encoder.clone(), &mut stream_rng(cfg.master_seed, &[1])))
        .transpose()?;
    let mut optimizer = model.as_ref().map(|m| Optimizer::new(&cfg.ppo, m.params()));
    let mut records = Vec::with_capacity(cfg.episodes);

    for ep in 0..cfg.episodes {
        let (instance_seed, inst) = cfg.instance(ep)?;
        let initial = initial_solution(&inst, derive_seed(cfg.master_seed, &[3, ep as u64]));
        let shared = model.take().map(Arc::new);
        let mut policy = PolicyRegistry::standard().build(
            &cfg.policy,
            &PolicyArgs {
                actions: actions.len(),
                model: shared.clone(),
                sequence: cfg.sequence.clone(),
            },
        )?;
        let mut shake = RandomShake {
            strength: cfg.shake_strength,
        };
        let result = run_episode(
            &inst,
            initial,
            &actions,
            policy.as_mut(),
            &mut shake,
            &cfg.episode,
            derive_seed(cfg.master_seed, &[4, ep as u64]),
        )?;
        drop(policy);

        let mut ppo: Option<PpoStats> = None;
        if let Some(arc) = shared {
            let mut m = Arc::try_unwrap(arc).map_err(|_| AgentError::Internal("model still shared".into()))?;
            let ctx = PpoContext {
                inst: &inst,
                dis: Arc::new(build_distance_graph(&inst)),
                initial_cost: result.stats.initial_cost,
                remaining_capacity: cfg.episode.remaining_capacity,
            };
            let opt = optimizer.as_mut().expect("optimizer exists with model");
            let mut rng = stream_rng(cfg.master_seed, &[5, ep as u64]);
            ppo = Some(ppo_update(&mut m, opt, &result.buffer, &ctx, &cfg.ppo, &mut rng)?);
            model = Some(m);
        }

        let record = TrainLogRecord {
            episode: ep + 1,
            instance_seed,
            initial_cost: result.stats.initial_cost,
            best_cost: result.stats.best_cost,
            phases: result.stats.phases,
            shakes: result.stats.shakes,
            policy_loss: ppo.map(|s| s.policy_loss),
            value_loss: ppo.map(|s| s.value_loss),
            kl: ppo.map(|s| s.kl),
            wall_ms: cfg.record_wall_time.then_some(result.stats.wall_ms),
        };
        let line = serde_json::to_string(&record).map_err(|e| AgentError::Internal(e.to_string()))?;
        writeln!(log, "{line}")?;
        records.push(record);

        if let (Some(target), Some(m), Some(every)) = (checkpoint, model.as_ref(), cfg.checkpoint_every) {
            if (ep + 1) % every == 0 && ep + 1 < cfg.episodes {
                save_checkpoint(m, target.metadata, target.path)?;
            }
        }
    }
    log.flush()?;
    if let (Some(target), Some(m)) = (checkpoint, model.as_ref()) {
        save_checkpoint(m, target.metadata, target.path)?;
    }
    Ok(TrainOutcome { model, log: records })
}
