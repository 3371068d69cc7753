//! Operator-selection agent: policies, episodes, phase rewards, PPO,
//! training and evaluation.

mod buffer;
mod episode;
mod evaluate;
mod policy;
mod ppo;
mod train;

use thiserror::Error;

pub use buffer::{assign_phase_rewards, Buffer, Transition};
pub use episode::{run_episode, EpisodeConfig, EpisodeResult, EpisodeStats, StepRecord};
pub use evaluate::{
    evaluate, gap_pct, run_seed, EvalConfig, EvalInstance, EvalRecord, EvalReport, EvalSummary, InstanceSummary,
    PolicyFactory,
};
pub use policy::{
    log_softmax, sample_action, softmax, Decision, FixedSequencePolicy, GamaPolicy, OperatorPolicy, PolicyArgs,
    PolicyOutput, PolicyRegistry, RandomPolicy, SampleMode, StepContext,
};
pub use ppo::{phase_returns, ppo_update, Optimizer, OptimizerKind, PpoConfig, PpoContext, PpoStats};
pub use train::{train, CheckpointTarget, InstanceSource, TrainConfig, TrainLogRecord, TrainOutcome};

use crate::encoder::{CheckpointError, EncoderError};
use crate::vrp::VrpError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("internal: {0}")]
    Internal(String),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Vrp(#[from] VrpError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
