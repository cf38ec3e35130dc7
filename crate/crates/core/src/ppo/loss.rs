use rayon::prelude::*;

use super::{PpoConfig, RolloutBatch};
use crate::mlp::{DenseNet, GradientSet, PolicyNet};
use crate::{Error, Result};

/// `min(ρ·Â, clip(ρ, 1-ε, 1+ε)·Â)` for one sample.
#[inline]
pub fn clipped_surrogate(ratio: f64, adv: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    (ratio * adv).min(clipped * adv)
}

/// Derivative of [`clipped_surrogate`] with respect to `ρ`: `Â` where the
/// unclipped branch is selected by the min, zero where the clipped one is.
#[inline]
pub fn clipped_surrogate_grad(ratio: f64, adv: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    if ratio * adv <= clipped * adv {
        adv
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    /// `-E[clipped surrogate]`
    pub policy_loss: f64,
    /// `E[(V - R)²]`
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// `policy_loss + c_v·value_loss - c_e·entropy`
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub stats: LossStats,
    /// Actor network partials plus `log_std`.
    pub actor_grad: GradientSet<f64>,
    pub critic_grad: GradientSet<f64>,
}

const CHUNK: usize = 64;

struct Partial {
    surrogate: f64,
    value_sq: f64,
    kl: f64,
    clipped: usize,
    actor: GradientSet<f64>,
    critic: GradientSet<f64>,
}

/// PPO loss over the samples `indices` of `batch`, with gradients.
///
/// `advantages` should already be normalized. Samples are processed in fixed
/// chunks whose partial sums are combined in chunk order, so the result does
/// not depend on the thread count.
pub fn ppo_loss(
    policy: &PolicyNet<f64>,
    critic: &DenseNet<f64>,
    batch: &RolloutBatch,
    advantages: &[f64],
    returns: &[f64],
    indices: &[usize],
    cfg: &PpoConfig,
) -> Result<LossOutput> {
    if indices.is_empty() {
        return Err(Error::Config("empty minibatch".into()));
    }
    let n = indices.len() as f64;
    let eps = cfg.clip_eps;
    let act_dim = policy.head.dim();

    let partials: Vec<Result<Partial>> = indices
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut p = Partial {
                surrogate: 0.0,
                value_sq: 0.0,
                kl: 0.0,
                clipped: 0,
                actor: GradientSet::zeros_for(&policy.net, act_dim),
                critic: GradientSet::zeros_for(critic, 0),
            };
            for &i in chunk {
                let obs = &batch.obs[i];
                let action = &batch.actions[i];
                let (mean, cache) = policy.net.forward(obs)?;
                let lp = policy.head.log_prob(&mean, action);
                let ratio = (lp - batch.log_probs[i]).exp();
                if !ratio.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "probability ratio at sample {i} (log_prob {lp}, old {})",
                        batch.log_probs[i]
                    )));
                }
                let adv = advantages[i];
                p.surrogate += clipped_surrogate(ratio, adv, eps);
                p.kl += (ratio - 1.0) - ratio.ln();
                if (ratio - 1.0).abs() > eps {
                    p.clipped += 1;
                }
                let d_lp = -clipped_surrogate_grad(ratio, adv, eps) * ratio / n;
                if d_lp != 0.0 {
                    let (dmean, dls) = policy.head.log_prob_grads(&mean, action);
                    let grad_out: Vec<f64> = dmean.iter().map(|g| g * d_lp).collect();
                    policy.net.backward_accumulate(&cache, &grad_out, &mut p.actor)?;
                    for (acc, g) in p.actor.log_std.iter_mut().zip(dls) {
                        *acc += g * d_lp;
                    }
                }

                let (v, vcache) = critic.forward(obs)?;
                let err = v[0] - returns[i];
                p.value_sq += err * err;
                let d_v = 2.0 * cfg.value_coef * err / n;
                critic.backward_accumulate(&vcache, &[d_v], &mut p.critic)?;
            }
            Ok(p)
        })
        .collect();

    let mut surrogate = 0.0;
    let mut value_sq = 0.0;
    let mut kl = 0.0;
    let mut clipped = 0;
    let mut actor_grad = GradientSet::zeros_for(&policy.net, act_dim);
    let mut critic_grad = GradientSet::zeros_for(critic, 0);
    for p in partials {
        let p = p?;
        surrogate += p.surrogate;
        value_sq += p.value_sq;
        kl += p.kl;
        clipped += p.clipped;
        actor_grad.add_assign(&p.actor);
        critic_grad.add_assign(&p.critic);
    }
    for g in &mut actor_grad.log_std {
        *g -= cfg.entropy_coef;
    }
    let entropy = policy.head.entropy();
    let policy_loss = -surrogate / n;
    let value_loss = value_sq / n;
    let stats = LossStats {
        policy_loss,
        value_loss,
        entropy,
        approx_kl: kl / n,
        clip_fraction: clipped as f64 / n,
        total: policy_loss + cfg.value_coef * value_loss - cfg.entropy_coef * entropy,
    };
    Ok(LossOutput {
        stats,
        actor_grad,
        critic_grad,
    })
}
