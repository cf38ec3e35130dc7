use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dynamics::{Action, FlyerParams, FlyerState, GoalPose, Observation};
use crate::math::{Scalar, SeededRng, UnitQuat, Vec3};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Translate 0.5 m along +X holding attitude.
    Undock,
    /// Goal position in ±0.5 m per axis, attitude `normalize(1, ±0.5, ±0.5, ±0.5)`.
    Random,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Undock, Task::Random];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Undock => "undock",
            Task::Random => "random",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "undock" => Ok(Task::Undock),
            "random" => Ok(Task::Random),
            other => Err(Error::Config(format!("unknown task '{other}'"))),
        }
    }
}

pub const UNDOCK_DISTANCE: f64 = 0.5;
pub const GOAL_POSITION_RANGE: f64 = 0.5;
pub const GOAL_QUAT_RANGE: f64 = 0.5;

pub fn sample_goal<T: Scalar>(rng: &mut SeededRng, task: Task) -> GoalPose<T> {
    match task {
        Task::Undock => GoalPose {
            position: Vec3::new(T::lit(UNDOCK_DISTANCE), T::zero(), T::zero()),
            orientation: UnitQuat::identity(),
        },
        Task::Random => {
            let r = T::lit(GOAL_POSITION_RANGE);
            let position = Vec3::new(rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r));
            let q = T::lit(GOAL_QUAT_RANGE);
            let orientation =
                UnitQuat::normalize(T::one(), rng.uniform(-q, q), rng.uniform(-q, q), rng.uniform(-q, q))
                    .expect("w = 1 keeps the quaternion away from zero");
            GoalPose {
                position,
                orientation,
            }
        }
    }
}

/// Episode start: at the origin, identity attitude, at rest.
pub fn reset<T: Scalar>(rng: &mut SeededRng, task: Task) -> (FlyerState<T>, GoalPose<T>) {
    (FlyerState::at_rest(), sample_goal(rng, task))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    /// per metre of position error
    pub position: f64,
    /// per radian of attitude error
    pub orientation: f64,
    /// per m/s
    pub lin_vel: f64,
    /// per rad/s
    pub ang_vel: f64,
    /// on the squared norm of the limit-normalized action
    pub action: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            position: 1.0,
            orientation: 0.5,
            lin_vel: 0.2,
            ang_vel: 0.1,
            action: 0.01,
        }
    }
}

/// `-w_p‖e_p‖ - w_q·θ - w_v‖v‖ - w_ω‖ω‖ - w_a‖a/limits‖²`.
pub fn reward<T: Scalar>(
    obs: &Observation<T>,
    action: &Action<T>,
    weights: &RewardWeights,
    params: &FlyerParams<T>,
) -> T {
    let v = |i: usize| Vec3::new(obs[i], obs[i + 1], obs[i + 2]).norm();
    let a2: T = action.clamped(params).normalized(params).iter().map(|&x| x * x).sum();
    -(T::lit(weights.position) * v(6)
        + T::lit(weights.orientation) * v(9)
        + T::lit(weights.lin_vel) * v(0)
        + T::lit(weights.ang_vel) * v(3)
        + T::lit(weights.action) * a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flyer::observe;
    use crate::math::quat_angle_deg;

    #[test]
    fn undock_goal_and_reset() {
        let mut rng = SeededRng::new(3);
        let g: GoalPose<f64> = sample_goal(&mut rng, Task::Undock);
        assert_eq!(g.position, Vec3::new(0.5, 0.0, 0.0));
        assert_eq!(g.orientation, UnitQuat::identity());
        for seed in 0..10 {
            let (s, g) = reset::<f64>(&mut SeededRng::new(seed), Task::Undock);
            assert_eq!(s.lin_vel, Vec3::zero());
            assert_eq!(s.ang_vel, Vec3::zero());
            assert_eq!(observe(&s, &g), [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn random_goals_stay_in_envelope() {
        let max_angle = 2.0 * (0.75f64).sqrt().atan();
        let mut rng = SeededRng::new(11);
        let mut seen_max: f64 = 0.0;
        for _ in 0..20_000 {
            let g: GoalPose<f64> = sample_goal(&mut rng, Task::Random);
            for c in g.position.to_array() {
                assert!(c.abs() <= 0.5);
            }
            let a = quat_angle_deg(&UnitQuat::identity(), &g.orientation).to_radians();
            assert!(a <= max_angle + 1e-12);
            seen_max = seen_max.max(a);
        }
        assert!((max_angle.to_degrees() - 81.787).abs() < 1e-3);
        assert!(seen_max.to_degrees() > 60.0);
    }

    #[test]
    fn random_goals_reproduce() {
        let a: Vec<GoalPose<f64>> = {
            let mut r = SeededRng::new(77);
            (0..5).map(|_| sample_goal(&mut r, Task::Random)).collect()
        };
        let b: Vec<GoalPose<f64>> = {
            let mut r = SeededRng::new(77);
            (0..5).map(|_| sample_goal(&mut r, Task::Random)).collect()
        };
        assert_eq!(a, b);
        let s1 = reset::<f64>(&mut SeededRng::new(4), Task::Random);
        let s2 = reset::<f64>(&mut SeededRng::new(4), Task::Random);
        assert_eq!(s1, s2);
    }

    #[test]
    fn reward_values() {
        let p = FlyerParams::<f64>::default();
        let w = RewardWeights::default();
        assert_eq!(reward(&[0.0; 12], &Action::zero(), &w, &p), 0.0);
        let mut o = [0.0; 12];
        o[6] = 0.5;
        assert_eq!(reward(&o, &Action::zero(), &w, &p), -w.position * 0.5);
        let mut prev = 0.0;
        for k in 1..20 {
            o[6] = k as f64 * 0.05;
            let r = reward(&o, &Action::zero(), &w, &p);
            assert!(r < prev);
            prev = r;
        }
        let full = Action { force: Vec3::new(0.85, 0.0, 0.0), torque: Vec3::new(0.0, 0.0, -0.1) };
        assert!((reward(&[0.0; 12], &full, &w, &p) + 2.0 * w.action).abs() < 1e-15);
    }

    #[test]
    fn task_parsing() {
        assert_eq!("undock".parse::<Task>().unwrap(), Task::Undock);
        assert_eq!("random".parse::<Task>().unwrap(), Task::Random);
        assert!("dock".parse::<Task>().is_err());
    }
}
