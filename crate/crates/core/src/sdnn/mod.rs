//! Sigma-delta conversion of a ReLU actor and its event-driven runtime.

mod counters;
mod encoding;
mod engine;
mod net;

pub use counters::OpCounters;
pub use encoding::{DeltaState, SdValue, SigmaState, SpikeVector};
pub use engine::{EngineValue, Requant, ACC_MAX, ACC_MIN, MAX_SPIKE};
pub use net::{convert, ExecMode, QuantConfig, SdnnLayer, SdnnMode, SdnnNet, SdnnParams, Thresholds};

/// Hidden-layer count of a net with the given layer widths.
pub fn pipeline_latency_for_dims(dims: &[usize]) -> usize {
    dims.len().saturating_sub(2)
}
