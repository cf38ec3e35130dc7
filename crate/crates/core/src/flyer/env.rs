use serde::{Deserialize, Serialize};

use super::dynamics::{observe, step, Action, FlyerParams, FlyerState, GoalPose, ACT_DIM, OBS_DIM};
use super::task::{reward, sample_goal, RewardWeights, Task};
use crate::math::{quat_angle_deg, SeededRng, UnitQuat, Vec3};
use crate::ppo::{EpisodeStats, Environment, Transition};
use crate::Result;

/// Start-state and goal distribution used while training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingInit {
    /// Start position uniform in ±spread m per axis.
    pub position_spread: f64,
    /// Start attitude `normalize(1, ±s, ±s, ±s)`; 0 keeps the identity start used in evaluation.
    pub orientation_spread: f64,
    /// Fraction of episodes whose goal is the undock offset from the start.
    pub undock_fraction: f64,
}

impl Default for TrainingInit {
    fn default() -> Self {
        Self {
            position_spread: 0.5,
            orientation_spread: 0.0,
            undock_fraction: 0.25,
        }
    }
}

/// Auto-resetting training environment around [`step`].
#[derive(Debug, Clone)]
pub struct FlyerEnv {
    pub params: FlyerParams<f64>,
    pub weights: RewardWeights,
    pub init: TrainingInit,
    rng: SeededRng,
    state: FlyerState<f64>,
    goal: GoalPose<f64>,
    t: usize,
    episode_return: f64,
}

impl FlyerEnv {
    pub fn new(params: FlyerParams<f64>, weights: RewardWeights, init: TrainingInit, rng: SeededRng) -> Self {
        let mut env = Self {
            params,
            weights,
            init,
            rng,
            state: FlyerState::at_rest(),
            goal: GoalPose {
                position: Vec3::zero(),
                orientation: UnitQuat::identity(),
            },
            t: 0,
            episode_return: 0.0,
        };
        env.start_episode();
        env
    }

    /// Shortens the first episode by `offset` steps so that a batch of
    /// environments does not finish episodes in lock-step.
    pub fn with_time_offset(mut self, offset: usize) -> Self {
        self.t = offset % self.params.episode_len;
        self
    }

    pub fn state(&self) -> &FlyerState<f64> {
        &self.state
    }

    pub fn goal(&self) -> &GoalPose<f64> {
        &self.goal
    }

    fn start_episode(&mut self) {
        let s = self.init.position_spread;
        let start = Vec3::new(
            self.rng.uniform(-s, s),
            self.rng.uniform(-s, s),
            self.rng.uniform(-s, s),
        );
        let o = self.init.orientation_spread;
        let attitude = if o > 0.0 {
            UnitQuat::normalize(1.0, self.rng.uniform(-o, o), self.rng.uniform(-o, o), self.rng.uniform(-o, o))
                .unwrap_or_else(UnitQuat::identity)
        } else {
            UnitQuat::identity()
        };
        let task = if self.rng.next_f64() < self.init.undock_fraction {
            Task::Undock
        } else {
            Task::Random
        };
        let mut goal = sample_goal(&mut self.rng, task);
        if task == Task::Undock {
            goal.position += start;
            goal.orientation = attitude;
        }
        self.state = FlyerState {
            position: start,
            orientation: attitude,
            ..FlyerState::at_rest()
        };
        self.goal = goal;
        self.t = 0;
        self.episode_return = 0.0;
    }

    fn current_obs(&self) -> Vec<f64> {
        observe(&self.state, &self.goal).to_vec()
    }
}

impl Environment for FlyerEnv {
    fn obs_dim(&self) -> usize {
        OBS_DIM
    }

    fn act_dim(&self) -> usize {
        ACT_DIM
    }

    fn observation(&self) -> Vec<f64> {
        self.current_obs()
    }

    fn step(&mut self, raw_action: &[f64]) -> Result<Transition> {
        let action = Action::from_network(raw_action, &self.params);
        self.state = step(&self.state, &action, &self.params)?;
        let obs = observe(&self.state, &self.goal);
        let r = reward(&obs, &action, &self.weights, &self.params);
        self.t += 1;
        self.episode_return += r;
        if self.t < self.params.episode_len {
            return Ok(Transition {
                obs: obs.to_vec(),
                reward: r,
                terminated: false,
                truncated: false,
                final_obs: None,
                episode: None,
            });
        }
        let stats = EpisodeStats {
            episode_return: self.episode_return,
            final_position_error: (self.goal.position - self.state.position).norm(),
            final_orientation_error_deg: quat_angle_deg(&self.state.orientation, &self.goal.orientation),
        };
        self.start_episode();
        Ok(Transition {
            obs: self.current_obs(),
            reward: r,
            terminated: false,
            truncated: true,
            final_obs: Some(obs.to_vec()),
            episode: Some(stats),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn episodes_truncate_at_horizon_and_reset() {
        let mut env = FlyerEnv::new(FlyerParams::default(), RewardWeights::default(), TrainingInit::default(), SeededRng::new(1));
        for t in 1..=200 {
            let tr = env.step(&[0.0; 6]).unwrap();
            assert_eq!(tr.truncated, t == 200);
            if t == 200 {
                let ep = tr.episode.unwrap();
                assert!(ep.final_position_error > 0.0);
                assert!(tr.final_obs.is_some());
            }
        }
    }

    #[test]
    fn undock_training_goal_is_relative_to_start() {
        let init = TrainingInit { undock_fraction: 1.0, ..Default::default() };
        let env = FlyerEnv::new(FlyerParams::default(), RewardWeights::default(), init, SeededRng::new(2));
        let o = env.observation();
        assert_eq!(&o[6..9], &[0.5, 0.0, 0.0]);
    }

    #[test]
    fn offset_shortens_first_episode() {
        let mut env = FlyerEnv::new(FlyerParams::default(), RewardWeights::default(), TrainingInit::default(), SeededRng::new(3))
            .with_time_offset(150);
        let n = (1..=200).find(|_| env.step(&[0.0; 6]).unwrap().truncated).unwrap();
        assert_eq!(n, 50);
    }
}
