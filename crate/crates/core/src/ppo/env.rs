use crate::Result;

/// Finished-episode summary reported by an environment on its last step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub episode_return: f64,
    pub final_position_error: f64,
    pub final_orientation_error_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Next observation; after an episode end this is the first observation of the next episode.
    pub obs: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    /// Time-limit end; `final_obs` then holds the last observation for bootstrapping.
    pub truncated: bool,
    pub final_obs: Option<Vec<f64>>,
    pub episode: Option<EpisodeStats>,
}

impl Transition {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Auto-resetting environment driven by the trainer.
pub trait Environment: Send {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn observation(&self) -> Vec<f64>;
    /// Applies an unsquashed policy output.
    fn step(&mut self, action: &[f64]) -> Result<Transition>;
}
