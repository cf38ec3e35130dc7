use serde::{Deserialize, Serialize};

/// Event and arithmetic counts accumulated over a run. All fields only grow
/// until [`OpCounters::reset`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub steps: u64,
    /// Multiply-accumulates triggered by spikes: `Σ spikes × fanout`.
    pub synops: u64,
    /// MACs a dense forward pass would have spent over the same steps.
    pub dense_macs: u64,
    /// Spikes emitted per delta-encoding boundary (input first, then each hidden layer).
    pub messages: Vec<u64>,
    pub neuron_updates: u64,
    /// Saturation events in quantized mode (accumulator, rescale or input clamp).
    pub overflows: u64,
}

impl OpCounters {
    pub fn new(boundaries: usize) -> Self {
        Self {
            messages: vec![0; boundaries],
            ..Self::default()
        }
    }

    pub fn reset(&mut self) {
        let n = self.messages.len();
        *self = Self::new(n);
    }

    pub fn total_messages(&self) -> u64 {
        self.messages.iter().sum()
    }

    pub fn synops_per_step(&self) -> f64 {
        ratio(self.synops, self.steps)
    }

    pub fn dense_macs_per_step(&self) -> f64 {
        ratio(self.dense_macs, self.steps)
    }

    /// Emitted messages over the number a dense transmission would send,
    /// given the widths of the delta-encoded boundaries.
    pub fn message_density(&self, widths: &[usize]) -> f64 {
        let slots = self.steps * widths.iter().sum::<usize>() as u64;
        ratio(self.total_messages(), slots)
    }

    pub fn merge(&mut self, other: &Self) {
        if self.messages.len() < other.messages.len() {
            self.messages.resize(other.messages.len(), 0);
        }
        self.steps += other.steps;
        self.synops += other.synops;
        self.dense_macs += other.dense_macs;
        self.neuron_updates += other.neuron_updates;
        self.overflows += other.overflows;
        for (a, b) in self.messages.iter_mut().zip(&other.messages) {
            *a += b;
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_and_rates() {
        let mut c = OpCounters::new(2);
        c.steps = 10;
        c.messages = vec![12, 28];
        c.synops = 500;
        c.dense_macs = 1000;
        assert_eq!(c.message_density(&[4, 16]), 40.0 / 200.0);
        assert_eq!(c.synops_per_step(), 50.0);
        assert_eq!(c.dense_macs_per_step(), 100.0);
        let d = c.clone();
        c.merge(&d);
        assert_eq!(c.messages, vec![24, 56]);
        c.reset();
        assert_eq!(c, OpCounters::new(2));
        assert_eq!(c.message_density(&[4]), 0.0);
    }
}
