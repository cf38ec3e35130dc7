//! Zero-gravity 6-DOF free-flyer: rigid-body dynamics, the 12-dim
//! observation, goal sampling and reward.

mod dynamics;
mod env;
mod task;

pub use dynamics::{observe, step, Action, FlyerParams, FlyerState, GoalPose, Observation, OBS_DIM, ACT_DIM};
pub use env::{FlyerEnv, TrainingInit};
pub use task::{reset, reward, sample_goal, RewardWeights, Task};
