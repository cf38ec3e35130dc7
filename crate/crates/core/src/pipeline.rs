//! Train → calibrate → convert, as driven by a [`RunConfig`].

use crate::eval::collect_observations;
use crate::flyer::FlyerEnv;
use crate::io::RunConfig;
use crate::math::SeededRng;
use crate::mlp::PolicyNet;
use crate::ppo::{train_with_progress, TrainLogRow, TrainOutput};
use crate::sdnn::{convert, SdnnMode, SdnnNet, Thresholds};
use crate::Result;

/// PPO on the training environment. Environment `i` starts `i·T/n_envs` steps
/// into its first episode so that resets are spread over the rollout.
pub fn train_actor(cfg: &RunConfig, on_iteration: impl FnMut(&TrainLogRow)) -> Result<TrainOutput> {
    cfg.validate()?;
    let n = cfg.ppo.n_envs;
    let horizon = cfg.flyer.episode_len;
    train_with_progress(
        &cfg.ppo,
        |i, rng| FlyerEnv::new(cfg.flyer, cfg.reward, cfg.training_init, rng).with_time_offset(i * horizon / n),
        SeededRng::new(cfg.train_seed),
        on_iteration,
    )
}

pub fn calibration_set(policy: &PolicyNet<f64>, cfg: &RunConfig) -> Result<Vec<Vec<f64>>> {
    collect_observations(policy, &cfg.tasks, &cfg.calibration_seeds, &cfg.flyer)
}

pub fn convert_actor(policy: &PolicyNet<f64>, cfg: &RunConfig, thresholds: Thresholds) -> Result<SdnnNet<f64>> {
    let calib = calibration_set(policy, cfg)?;
    convert(&policy.net, thresholds, cfg.quant, &calib)
}

/// Largest `|SDNN − ANN|` output difference when the converted net runs in
/// float mode at zero threshold over `stream`.
pub fn zero_threshold_deviation(policy: &PolicyNet<f64>, net: &SdnnNet<f64>, stream: &[Vec<f64>]) -> Result<f64> {
    let mut reference = SdnnNet::from_params(net.params().clone(), SdnnMode::Float)?;
    reference.set_thresholds(Thresholds::uniform(0.0))?;
    let mut worst = 0.0f64;
    for x in stream {
        let a = policy.mean(x)?;
        let s = reference.step(x)?;
        worst = a.iter().zip(&s).map(|(p, q)| (p - q).abs()).fold(worst, f64::max);
    }
    Ok(worst)
}
