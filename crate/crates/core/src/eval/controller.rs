use crate::mlp::PolicyNet;
use crate::sdnn::{SdnnMode, SdnnNet};
use crate::Result;

/// Per-inference cost recorded alongside each step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCost {
    pub spikes: u64,
    pub synops: u64,
    pub dense_macs: u64,
    /// Boundary slots a dense transmission would fill (0 for the ANN).
    pub message_slots: u64,
    pub overflows: u64,
}

/// A closed-loop controller: observation in, raw network output out.
#[derive(Debug, Clone)]
pub enum Controller {
    /// Actor evaluated at the Gaussian mean.
    Ann(PolicyNet<f64>),
    Sdnn(SdnnNet<f64>),
}

impl Controller {
    pub fn kind(&self) -> &'static str {
        match self {
            Controller::Ann(_) => "ann",
            Controller::Sdnn(n) => match n.mode() {
                SdnnMode::Float => "sdnn-float",
                SdnnMode::Quantized => "sdnn-quantized",
            },
        }
    }

    pub fn reset(&mut self) {
        if let Controller::Sdnn(n) = self {
            n.reset_states();
        }
    }

    pub fn dense_macs_per_inference(&self) -> u64 {
        let dims = match self {
            Controller::Ann(p) => p.net.layer_dims(),
            Controller::Sdnn(n) => n.dims(),
        };
        dims.windows(2).map(|w| (w[0] * w[1]) as u64).sum()
    }

    /// Hidden-layer count; the same for both controllers of one actor.
    pub fn pipeline_latency(&self) -> usize {
        match self {
            Controller::Ann(p) => p.net.layers().len() - 1,
            Controller::Sdnn(n) => n.pipeline_latency(),
        }
    }

    pub fn act(&mut self, obs: &[f64]) -> Result<(Vec<f64>, StepCost)> {
        let dense_macs = self.dense_macs_per_inference();
        match self {
            Controller::Ann(p) => Ok((
                p.mean(obs)?,
                StepCost {
                    dense_macs,
                    ..StepCost::default()
                },
            )),
            Controller::Sdnn(n) => {
                let before = n.counters().clone();
                let out = n.step(obs)?;
                let c = n.counters();
                let widths: usize = n.boundary_widths().iter().sum();
                let cost = StepCost {
                    spikes: c.total_messages() - before.total_messages(),
                    synops: c.synops - before.synops,
                    dense_macs: c.dense_macs - before.dense_macs,
                    message_slots: widths as u64,
                    overflows: c.overflows - before.overflows,
                };
                Ok((out, cost))
            }
        }
    }
}
