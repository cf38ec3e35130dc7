use serde::{Deserialize, Serialize};

use crate::mlp::AdamConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub n_envs: usize,
    pub n_steps: usize,
    pub iterations: usize,
    pub adam: AdamConfig,
    /// Global gradient-norm clip per network; `0` disables.
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    pub init_log_std: f64,
    pub hidden: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip_eps: 0.2,
            epochs: 4,
            minibatch_size: 512,
            value_coef: 0.5,
            entropy_coef: 0.0,
            n_envs: 256,
            n_steps: 64,
            iterations: 500,
            adam: AdamConfig::default(),
            max_grad_norm: 0.5,
            normalize_advantages: true,
            init_log_std: 0.5f64.ln(),
            hidden: vec![64, 64],
        }
    }
}

impl PpoConfig {
    /// Tiny configuration for plumbing checks.
    pub fn smoke() -> Self {
        Self {
            n_envs: 2,
            n_steps: 8,
            iterations: 1,
            minibatch_size: 8,
            epochs: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must be in [0, 1]");
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad("clip_eps must be in (0, 1)");
        }
        if self.epochs == 0 || self.minibatch_size == 0 || self.n_envs == 0 || self.n_steps == 0 {
            return bad("epochs, minibatch_size, n_envs and n_steps must be positive");
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 || self.max_grad_norm < 0.0 {
            return bad("coefficients must be non-negative");
        }
        if !(self.adam.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PpoConfig::default().validate().unwrap();
        PpoConfig::smoke().validate().unwrap();
        let c = PpoConfig::default();
        assert_eq!((c.gamma, c.lambda, c.clip_eps), (0.99, 0.95, 0.2));
        assert_eq!((c.n_envs, c.n_steps, c.minibatch_size, c.epochs), (256, 64, 512, 4));
    }

    #[test]
    fn rejects_out_of_range() {
        for c in [
            PpoConfig { gamma: 0.0, ..Default::default() },
            PpoConfig { lambda: 1.5, ..Default::default() },
            PpoConfig { clip_eps: 0.0, ..Default::default() },
            PpoConfig { n_envs: 0, ..Default::default() },
            PpoConfig { hidden: vec![], ..Default::default() },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: PpoConfig = serde_json::from_str(r#"{"iterations": 3}"#).unwrap();
        assert_eq!(c.iterations, 3);
        assert_eq!(c.gamma, 0.99);
    }
}
