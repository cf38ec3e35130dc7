use crate::{Error, Result};

/// Rectangular `n_envs × n_steps` rollout, environment-major
/// (`index = env * n_steps + step`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub n_envs: usize,
    pub n_steps: usize,
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Episode ended after this step; blocks bootstrapping across the boundary.
    pub dones: Vec<bool>,
    /// `V(s)` of the observation following each environment's last step.
    pub bootstrap_values: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.n_envs * self.n_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, env: usize, step: usize) -> usize {
        env * self.n_steps + step
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let check = |context: &'static str, got: usize, expected: usize| {
            if got == expected {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { context, expected, got })
            }
        };
        check("rollout observations", self.obs.len(), n)?;
        check("rollout actions", self.actions.len(), n)?;
        check("rollout log_probs", self.log_probs.len(), n)?;
        check("rollout rewards", self.rewards.len(), n)?;
        check("rollout values", self.values.len(), n)?;
        check("rollout dones", self.dones.len(), n)?;
        check("rollout bootstrap values", self.bootstrap_values.len(), self.n_envs)?;
        if !self.log_probs.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("rollout log_probs".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageSet {
    pub advantages: Vec<f64>,
    /// `advantages + values`, the critic's regression target.
    pub returns: Vec<f64>,
}

/// Backward recursion
/// `δ_t = r_t + γ·V(s_{t+1})·(1-done_t) - V(s_t)`,
/// `Â_t = δ_t + γλ·(1-done_t)·Â_{t+1}`.
pub fn compute_gae(batch: &RolloutBatch, gamma: f64, lambda: f64) -> Result<AdvantageSet> {
    batch.validate()?;
    let mut advantages = vec![0.0; batch.len()];
    for env in 0..batch.n_envs {
        let mut next_value = batch.bootstrap_values[env];
        let mut next_adv = 0.0;
        for t in (0..batch.n_steps).rev() {
            let i = batch.index(env, t);
            let live = if batch.dones[i] { 0.0 } else { 1.0 };
            let delta = batch.rewards[i] + gamma * next_value * live - batch.values[i];
            next_adv = delta + gamma * lambda * live * next_adv;
            advantages[i] = next_adv;
            next_value = batch.values[i];
        }
    }
    let returns = advantages.iter().zip(&batch.values).map(|(a, v)| a + v).collect();
    Ok(AdvantageSet { advantages, returns })
}

/// Shifts and scales to zero mean, unit standard deviation (population SD).
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let sd = var.sqrt() + 1e-8;
    adv.iter_mut().for_each(|a| *a = (*a - mean) / sd);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SeededRng;

    fn single_env(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64) -> RolloutBatch {
        let n = rewards.len();
        RolloutBatch {
            n_envs: 1,
            n_steps: n,
            obs: vec![vec![]; n],
            actions: vec![vec![]; n],
            log_probs: vec![0.0; n],
            rewards: rewards.to_vec(),
            values: values.to_vec(),
            dones: dones.to_vec(),
            bootstrap_values: vec![bootstrap],
        }
    }

    /// Explicit truncated sum Σ_l (γλ)^l δ_{t+l} within the episode.
    fn brute_force(b: &RolloutBatch, gamma: f64, lambda: f64) -> Vec<f64> {
        let n = b.n_steps;
        let next_v = |t: usize| if t + 1 < n { b.values[t + 1] } else { b.bootstrap_values[0] };
        let delta = |t: usize| {
            let live = if b.dones[t] { 0.0 } else { 1.0 };
            b.rewards[t] + gamma * next_v(t) * live - b.values[t]
        };
        (0..n)
            .map(|t| {
                let mut sum = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    sum += w * delta(k);
                    if b.dones[k] {
                        break;
                    }
                    w *= gamma * lambda;
                }
                sum
            })
            .collect()
    }

    #[test]
    fn terminal_single_step() {
        let b = single_env(&[2.0], &[0.5], &[true], 100.0);
        let a = compute_gae(&b, 0.99, 0.95).unwrap();
        assert_eq!(a.advantages, vec![1.5]);
        assert_eq!(a.returns, vec![2.0]);
    }

    #[test]
    fn lambda_zero_is_td_residual() {
        let b = single_env(&[1.0, -0.5, 0.25], &[0.1, 0.2, 0.3], &[false, false, false], 0.4);
        let a = compute_gae(&b, 0.9, 0.0).unwrap();
        let expect = [1.0 + 0.9 * 0.2 - 0.1, -0.5 + 0.9 * 0.3 - 0.2, 0.25 + 0.9 * 0.4 - 0.3];
        assert_eq!(a.advantages, expect.to_vec());
    }

    #[test]
    fn matches_explicit_sum() {
        let mut rng = SeededRng::new(2024);
        for _ in 0..200 {
            let n = 1 + rng.below(16);
            let r: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let d: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.2).collect();
            let b = single_env(&r, &v, &d, rng.uniform(-1.0, 1.0));
            let (g, l) = (rng.uniform(0.5, 1.0), rng.uniform(0.0, 1.0));
            let a = compute_gae(&b, g, l).unwrap();
            for (x, y) in a.advantages.iter().zip(brute_force(&b, g, l)) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut b = single_env(&[1.0, 2.0], &[0.0, 0.0], &[false, false], 0.0);
        b.values.pop();
        assert!(matches!(compute_gae(&b, 0.99, 0.95), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn normalization_moments() {
        let mut a = vec![1.0, 2.0, 3.0, 10.0];
        normalize_advantages(&mut a);
        let mean: f64 = a.iter().sum::<f64>() / 4.0;
        let var: f64 = a.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6);
    }
}
