use rayon::prelude::*;

use super::{compute_gae, normalize_advantages, ppo_loss, Environment, EpisodeStats, LossStats, PpoConfig, RolloutBatch};
use crate::math::SeededRng;
use crate::mlp::{Activation, Adam, DenseNet, GaussianHead, GradientSet, PolicyNet};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub iteration: usize,
    pub mean_step_reward: f64,
    /// Episodes that finished during this iteration's rollout.
    pub episodes: usize,
    /// NaN when no episode finished.
    pub mean_episode_return: f64,
    pub mean_final_position_error: f64,
    pub mean_final_orientation_error_deg: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

impl TrainLogRow {
    pub const CSV_HEADER: &'static str = "iteration,mean_step_reward,episodes,mean_return,mean_final_pos_err_m,mean_final_ang_err_deg,policy_loss,value_loss,entropy,approx_kl,clip_fraction";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.mean_step_reward,
            self.episodes,
            self.mean_episode_return,
            self.mean_final_position_error,
            self.mean_final_orientation_error_deg,
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.approx_kl,
            self.clip_fraction
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub policy: PolicyNet<f64>,
    pub critic: DenseNet<f64>,
    pub log: Vec<TrainLogRow>,
}

impl TrainOutput {
    pub fn log_csv(&self) -> String {
        let mut s = String::from(TrainLogRow::CSV_HEADER);
        s.push('\n');
        for row in &self.log {
            s.push_str(&row.csv_line());
            s.push('\n');
        }
        s
    }
}

struct Slot<E> {
    env: E,
    rng: SeededRng,
    obs: Vec<f64>,
}

struct Segment {
    obs: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    log_probs: Vec<f64>,
    rewards: Vec<f64>,
    values: Vec<f64>,
    dones: Vec<bool>,
    bootstrap: f64,
    episodes: Vec<EpisodeStats>,
}

fn rollout<E: Environment>(
    slot: &mut Slot<E>,
    policy: &PolicyNet<f64>,
    critic: &DenseNet<f64>,
    n_steps: usize,
    gamma: f64,
) -> Result<Segment> {
    let mut seg = Segment {
        obs: Vec::with_capacity(n_steps),
        actions: Vec::with_capacity(n_steps),
        log_probs: Vec::with_capacity(n_steps),
        rewards: Vec::with_capacity(n_steps),
        values: Vec::with_capacity(n_steps),
        dones: Vec::with_capacity(n_steps),
        bootstrap: 0.0,
        episodes: Vec::new(),
    };
    for _ in 0..n_steps {
        let (action, lp) = policy.sample(&slot.obs, &mut slot.rng)?;
        let value = critic.predict(&slot.obs)?[0];
        let tr = slot.env.step(&action)?;
        let mut reward = tr.reward;
        if tr.truncated && !tr.terminated {
            // time-limit end: fold the bootstrap value into the last reward
            if let Some(last) = &tr.final_obs {
                reward += gamma * critic.predict(last)?[0];
            }
        }
        if let Some(ep) = tr.episode {
            seg.episodes.push(ep);
        }
        seg.obs.push(std::mem::replace(&mut slot.obs, tr.obs.clone()));
        seg.actions.push(action);
        seg.log_probs.push(lp);
        seg.rewards.push(reward);
        seg.values.push(value);
        seg.dones.push(tr.done());
    }
    seg.bootstrap = critic.predict(&slot.obs)?[0];
    Ok(seg)
}

fn clip_grad(g: &mut GradientSet<f64>, max_norm: f64) {
    if max_norm > 0.0 {
        let n = g.norm();
        if n > max_norm {
            g.scale(max_norm / n);
        }
    }
}

pub fn train<E, F>(config: &PpoConfig, make_env: F, rng: SeededRng) -> Result<TrainOutput>
where
    E: Environment,
    F: Fn(usize, SeededRng) -> E,
{
    train_with_progress(config, make_env, rng, |_| {})
}

/// Runs PPO; `on_iteration` sees every log row as it is produced.
pub fn train_with_progress<E, F, P>(
    config: &PpoConfig,
    make_env: F,
    mut rng: SeededRng,
    mut on_iteration: P,
) -> Result<TrainOutput>
where
    E: Environment,
    F: Fn(usize, SeededRng) -> E,
    P: FnMut(&TrainLogRow),
{
    config.validate()?;
    let seed = rng.seed();
    let mut slots: Vec<Slot<E>> = (0..config.n_envs)
        .map(|i| {
            let env = make_env(i, SeededRng::derive(seed, 2 * i as u64));
            let obs = env.observation();
            Slot {
                env,
                rng: SeededRng::derive(seed, 2 * i as u64 + 1),
                obs,
            }
        })
        .collect();
    let obs_dim = slots[0].env.obs_dim();
    let act_dim = slots[0].env.act_dim();

    let mut dims = vec![obs_dim];
    dims.extend(&config.hidden);
    let mut actor_dims = dims.clone();
    actor_dims.push(act_dim);
    dims.push(1);
    let gain = 2f64.sqrt();
    let actor = DenseNet::orthogonal(&actor_dims, Activation::Relu, gain, 0.01, &mut rng)?;
    let mut critic = DenseNet::orthogonal(&dims, Activation::Relu, gain, 1.0, &mut rng)?;
    let mut policy = PolicyNet::new(actor, GaussianHead::constant(act_dim, config.init_log_std))?;

    let mut actor_opt = Adam::new(config.adam, policy.net.num_params() + act_dim);
    let mut critic_opt = Adam::new(config.adam, critic.num_params());
    let mut log = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        let diverged = |reason: String| Error::Divergence { iteration, reason };

        let segments: Vec<Result<Segment>> = slots
            .par_iter_mut()
            .map(|slot| rollout(slot, &policy, &critic, config.n_steps, config.gamma))
            .collect();
        let mut batch = RolloutBatch {
            n_envs: config.n_envs,
            n_steps: config.n_steps,
            ..Default::default()
        };
        let mut episodes = Vec::new();
        for seg in segments {
            let seg = seg.map_err(|e| diverged(e.to_string()))?;
            batch.obs.extend(seg.obs);
            batch.actions.extend(seg.actions);
            batch.log_probs.extend(seg.log_probs);
            batch.rewards.extend(seg.rewards);
            batch.values.extend(seg.values);
            batch.dones.extend(seg.dones);
            batch.bootstrap_values.push(seg.bootstrap);
            episodes.extend(seg.episodes);
        }

        let adv_set = compute_gae(&batch, config.gamma, config.lambda)?;
        let mut advantages = adv_set.advantages.clone();
        if config.normalize_advantages {
            normalize_advantages(&mut advantages);
        }

        let mut indices: Vec<usize> = (0..batch.len()).collect();
        let mut last = LossStats::default();
        for _ in 0..config.epochs {
            rng.shuffle(&mut indices);
            for mb in indices.chunks(config.minibatch_size) {
                let out = ppo_loss(&policy, &critic, &batch, &advantages, &adv_set.returns, mb, config)
                    .map_err(|e| diverged(e.to_string()))?;
                if !out.stats.total.is_finite() || !out.actor_grad.is_finite() || !out.critic_grad.is_finite() {
                    return Err(diverged(format!("non-finite loss or gradient: {:?}", out.stats)));
                }
                let (mut ag, mut cg) = (out.actor_grad, out.critic_grad);
                clip_grad(&mut ag, config.max_grad_norm);
                clip_grad(&mut cg, config.max_grad_norm);

                let mut p = policy.params_flat();
                actor_opt.step(&mut p, &ag.flat());
                policy.set_params_flat(&p)?;
                let mut c = critic.params_flat();
                critic_opt.step(&mut c, &cg.flat());
                critic.set_params_flat(&c)?;
                last = out.stats;
            }
        }
        if !policy.net.is_finite() || !critic.is_finite() {
            return Err(diverged("parameters became non-finite".into()));
        }

        let mean = |f: fn(&EpisodeStats) -> f64| {
            if episodes.is_empty() {
                f64::NAN
            } else {
                episodes.iter().map(f).sum::<f64>() / episodes.len() as f64
            }
        };
        let row = TrainLogRow {
            iteration,
            mean_step_reward: batch.rewards.iter().sum::<f64>() / batch.len() as f64,
            episodes: episodes.len(),
            mean_episode_return: mean(|e| e.episode_return),
            mean_final_position_error: mean(|e| e.final_position_error),
            mean_final_orientation_error_deg: mean(|e| e.final_orientation_error_deg),
            policy_loss: last.policy_loss,
            value_loss: last.value_loss,
            entropy: last.entropy,
            approx_kl: last.approx_kl,
            clip_fraction: last.clip_fraction,
        };
        on_iteration(&row);
        log.push(row);
    }

    Ok(TrainOutput { policy, critic, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flyer::{FlyerEnv, FlyerParams, RewardWeights, TrainingInit};

    fn make(i: usize, rng: SeededRng) -> FlyerEnv {
        FlyerEnv::new(FlyerParams::default(), RewardWeights::default(), TrainingInit::default(), rng).with_time_offset(i * 37)
    }

    #[test]
    fn smoke_run_changes_parameters() {
        let cfg = PpoConfig::smoke();
        let mut init_rng = SeededRng::new(5);
        // the trainer consumes the same stream for initialization
        let dims = [12, 64, 64, 6];
        let before = DenseNet::<f64>::orthogonal(&dims, Activation::Relu, 2f64.sqrt(), 0.01, &mut init_rng).unwrap();
        let out = train(&cfg, make, SeededRng::new(5)).unwrap();
        assert_eq!(out.log.len(), 1);
        assert_ne!(out.policy.net, before);
        assert_eq!(out.policy.net.layer_dims(), dims.to_vec());
        assert_eq!(out.critic.layer_dims(), vec![12, 64, 64, 1]);
    }

    #[test]
    fn same_seed_same_log() {
        let cfg = PpoConfig { iterations: 2, n_envs: 4, n_steps: 16, minibatch_size: 16, ..PpoConfig::default() };
        let a = train(&cfg, make, SeededRng::new(8)).unwrap();
        let b = train(&cfg, make, SeededRng::new(8)).unwrap();
        assert_eq!(a.log_csv(), b.log_csv());
        assert_eq!(a.policy, b.policy);
        let c = train(&cfg, make, SeededRng::new(9)).unwrap();
        assert_ne!(a.policy, c.policy);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = PpoConfig { gamma: 2.0, ..PpoConfig::smoke() };
        assert!(matches!(train(&cfg, make, SeededRng::new(1)), Err(Error::Config(_))));
    }
}
