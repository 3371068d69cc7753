//! Run configuration: one TOML file with sections, overridable by flags.

use std::fmt;
use std::path::PathBuf;

use routing_aos::agent::{EpisodeConfig, EvalConfig, PpoConfig, SampleMode, TrainConfig};
use routing_aos::encoder::EncoderConfig;
use routing_aos::neighborhood::{ActionSet, OperatorId};
use routing_aos::state::RemainingCapacity;
use routing_aos::vrp::SizeClass;
use serde::{Deserialize, Serialize};

/// A configuration problem; the message names the offending field.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {msg}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstancesSection {
    /// Customers per generated training instance.
    pub customers: usize,
    /// Vehicle capacity; derived from the customer count when absent.
    pub capacity: Option<u32>,
    /// JSONL dataset cycled during training instead of fresh instances.
    pub dataset: Option<PathBuf>,
}

impl Default for InstancesSection {
    fn default() -> Self {
        InstancesSection {
            customers: 20,
            capacity: None,
            dataset: None,
        }
    }
}

impl InstancesSection {
    pub fn size_class(&self) -> SizeClass {
        match self.capacity {
            Some(capacity) => SizeClass::Custom { capacity },
            None => SizeClass::for_customers(self.customers),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    /// Step budget T.
    pub steps: usize,
    /// Stagnation threshold L.
    pub no_improve_limit: usize,
    /// Action set; every operator variant when empty.
    pub operators: Vec<OperatorId>,
    pub shake_strength: usize,
    pub remaining_capacity: RemainingCapacity,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            steps: 20_000,
            no_improve_limit: 6,
            operators: Vec::new(),
            shake_strength: 1,
            remaining_capacity: RemainingCapacity::AfterService,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Number of episodes NoE.
    pub episodes: usize,
    pub policy: String,
    /// Action indices cycled by the `fixed-sequence` policy.
    pub sequence: Vec<usize>,
    pub checkpoint_every: Option<usize>,
    pub record_wall_time: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            episodes: 500,
            policy: "gama".into(),
            sequence: Vec::new(),
            checkpoint_every: None,
            record_wall_time: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub runs: usize,
    pub mode: SampleMode,
    pub seed: u64,
    pub threads: Option<usize>,
    pub record_wall_time: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            runs: 1,
            mode: SampleMode::Sample,
            seed: 0,
            threads: None,
            record_wall_time: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed.
    pub seed: u64,
    pub instances: InstancesSection,
    pub search: SearchSection,
    pub encoder: EncoderConfig,
    pub ppo: PpoConfig,
    pub train: TrainSection,
    pub eval: EvalSection,
}

impl RunConfig {
    /// Parses and resolves a config file. `encoder.action_count` is derived
    /// from the operator list unless given explicitly.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError(e.to_string().trim_end().to_string()))?;
        let explicit_count = raw
            .get("encoder")
            .and_then(|e| e.get("action_count"))
            .is_some();
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
        if !explicit_count {
            cfg.encoder.action_count = cfg.actions()?.len();
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn operator_ids(&self) -> Vec<OperatorId> {
        if self.search.operators.is_empty() {
            OperatorId::default_set()
        } else {
            self.search.operators.clone()
        }
    }

    pub fn actions(&self) -> Result<ActionSet, ConfigError> {
        ActionSet::new(&self.operator_ids()).map_err(|e| invalid("search.operators", e))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let actions = self.actions()?;
        if self.instances.customers == 0 {
            return Err(invalid("instances.customers", "must be at least 1"));
        }
        if self.instances.capacity == Some(0) {
            return Err(invalid("instances.capacity", "must be positive"));
        }
        if self.search.steps == 0 {
            return Err(invalid("search.steps", "must be at least 1"));
        }
        if self.search.no_improve_limit == 0 {
            return Err(invalid("search.no_improve_limit", "must be at least 1"));
        }
        if self.search.shake_strength == 0 {
            return Err(invalid("search.shake_strength", "must be at least 1"));
        }
        if self.train.episodes == 0 {
            return Err(invalid("train.episodes", "must be at least 1"));
        }
        if self.train.checkpoint_every == Some(0) {
            return Err(invalid("train.checkpoint_every", "must be at least 1"));
        }
        if let Some(&bad) = self.train.sequence.iter().find(|&&a| a >= actions.len()) {
            return Err(invalid(
                "train.sequence",
                format!("action {bad} out of range for {} operators", actions.len()),
            ));
        }
        if self.eval.runs == 0 {
            return Err(invalid("eval.runs", "must be at least 1"));
        }
        if self.eval.threads == Some(0) {
            return Err(invalid("eval.threads", "must be at least 1"));
        }
        self.encoder.validate().map_err(|e| invalid("encoder", e))?;
        if self.encoder.action_count != actions.len() {
            return Err(invalid(
                "encoder.action_count",
                format!("is {} but search.operators lists {}", self.encoder.action_count, actions.len()),
            ));
        }
        self.ppo.validate().map_err(|e| ConfigError(e.to_string().trim_start_matches("config: ").to_string()))?;
        Ok(())
    }

    pub fn episode_config(&self, mode: SampleMode) -> EpisodeConfig {
        EpisodeConfig {
            steps: self.search.steps,
            no_improve_limit: self.search.no_improve_limit,
            mode,
            remaining_capacity: self.search.remaining_capacity,
            record_steps: false,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            runs: self.eval.runs,
            seed: self.eval.seed,
            threads: self.eval.threads,
            shake_strength: self.search.shake_strength,
            record_wall_time: self.eval.record_wall_time,
        }
    }

    /// Training settings; training episodes always sample.
    pub fn train_config(&self, source: routing_aos::agent::InstanceSource) -> TrainConfig {
        TrainConfig {
            episodes: self.train.episodes,
            source,
            actions: self.operator_ids(),
            encoder: self.encoder.clone(),
            episode: self.episode_config(SampleMode::Sample),
            ppo: self.ppo.clone(),
            policy: self.train.policy.clone(),
            sequence: self.train.sequence.clone(),
            shake_strength: self.search.shake_strength,
            master_seed: self.seed,
            record_wall_time: self.train.record_wall_time,
            checkpoint_every: self.train.checkpoint_every,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults_with_full_action_set() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg.encoder.action_count, 29);
        assert_eq!(cfg.search.steps, 20_000);
        assert_eq!(cfg.train.episodes, 500);
        cfg.validate().unwrap();
    }

    #[test]
    fn action_count_follows_operator_list() {
        let cfg = RunConfig::from_toml("[search]\noperators = [\"two_opt_intra\", \"relocate_inter:1\"]\n").unwrap();
        assert_eq!(cfg.encoder.action_count, 2);
        cfg.validate().unwrap();
    }

    #[test]
    fn explicit_mismatched_action_count_names_field() {
        let cfg = RunConfig::from_toml("[search]\noperators = [\"cross\"]\n[encoder]\naction_count = 4\n").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.0.starts_with("encoder.action_count"), "{err}");
    }

    #[test]
    fn unknown_key_is_reported() {
        let err = RunConfig::from_toml("[search]\nstep = 5\n").unwrap_err();
        assert!(err.0.contains("step"), "{err}");
    }

    #[test]
    fn head_divisibility_is_checked() {
        let cfg = RunConfig::from_toml("[encoder]\nhidden = 30\nheads = 4\n").unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.0.contains("encoder"), "{err}");
    }

    #[test]
    fn toml_round_trip_preserves_config() {
        let cfg = RunConfig::from_toml("seed = 9\n[search]\nsteps = 50\noperators = [\"cross\", \"swap_intra\"]\n").unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), cfg.to_toml());
    }
}
