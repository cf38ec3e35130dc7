use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::envelope::{read_envelope, save_envelope};
use crate::flyer::{FlyerParams, RewardWeights, Task, TrainingInit};
use crate::ppo::PpoConfig;
use crate::sdnn::{QuantConfig, Thresholds};
use crate::{Error, Result};

/// Environment variable naming the default output root.
pub const ENV_OUT_ROOT: &str = "FLYER_SDNN_OUT";

pub const CONFIG_FORMAT: &str = "run-config";

/// Everything a run needs. Missing fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub flyer: FlyerParams<f64>,
    pub reward: RewardWeights,
    pub training_init: TrainingInit,
    pub ppo: PpoConfig,
    pub train_seed: u64,
    pub quant: QuantConfig,
    pub thresholds: Thresholds,
    /// Episodes whose observations calibrate the quantization scales.
    pub calibration_seeds: Vec<u64>,
    pub tasks: Vec<Task>,
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            flyer: FlyerParams::default(),
            reward: RewardWeights::default(),
            training_init: TrainingInit::default(),
            ppo: PpoConfig::default(),
            train_seed: 0,
            quant: QuantConfig::default(),
            thresholds: Thresholds::default(),
            calibration_seeds: (100..110).collect(),
            tasks: Task::ALL.to_vec(),
            seeds: (0..10).collect(),
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn smoke() -> Self {
        Self {
            ppo: PpoConfig::smoke(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.flyer.validate()?;
        self.ppo.validate()?;
        self.quant.validate()?;
        self.thresholds.validate()?;
        let r = &self.reward;
        if ![r.position, r.orientation, r.lin_vel, r.ang_vel, r.action].iter().all(|w| w.is_finite() && *w >= 0.0) {
            return Err(Error::Config("reward weights must be finite and non-negative".into()));
        }
        let i = &self.training_init;
        if !(i.position_spread.is_finite() && i.position_spread >= 0.0)
            || !(i.orientation_spread.is_finite() && i.orientation_spread >= 0.0)
            || !(0.0..=1.0).contains(&i.undock_fraction)
        {
            return Err(Error::Config("training_init spreads must be >= 0 and undock_fraction in [0, 1]".into()));
        }
        if self.tasks.is_empty() {
            return Err(Error::Config("task list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        if self.calibration_seeds.is_empty() {
            return Err(Error::Config("calibration seed list is empty".into()));
        }
        Ok(())
    }

    /// Accepts a plain config object or a saved (checksummed) resolved config.
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_slice(bytes)?;
        let cfg: Self = if value.get("payload").is_some() && value.get("format").is_some() {
            serde_json::from_value(read_envelope(bytes, CONFIG_FORMAT)?.payload)?
        } else {
            serde_json::from_value(value)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_envelope(path, CONFIG_FORMAT, self)
    }
}
