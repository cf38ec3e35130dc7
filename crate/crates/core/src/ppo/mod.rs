//! Clipped-objective PPO with generalized advantage estimation.

mod config;
mod env;
mod gae;
mod loss;
mod train;

pub use config::PpoConfig;
pub use env::{EpisodeStats, Environment, Transition};
pub use gae::{compute_gae, normalize_advantages, AdvantageSet, RolloutBatch};
pub use loss::{clipped_surrogate, clipped_surrogate_grad, ppo_loss, LossOutput, LossStats};
pub use train::{train, train_with_progress, TrainLogRow, TrainOutput};
