use serde::{Deserialize, Serialize};

use super::counters::OpCounters;
use super::encoding::DeltaState;
use super::engine::{Engine, EngineLayer, EngineValue, Requant, ACC_MAX, ACC_MIN, MAX_SPIKE};
use crate::math::{QuantSpec, Scalar};
use crate::mlp::{Activation, DenseNet};
use crate::{Error, Result};

/// Real-valued delta thresholds: one for the observation encoder, one shared
/// by the hidden activation encoders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub input: f64,
    pub hidden: f64,
}

impl Thresholds {
    pub const DEFAULT: f64 = 0.1;

    pub fn uniform(theta: f64) -> Self {
        Self {
            input: theta,
            hidden: theta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("input", self.input), ("hidden", self.hidden)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} threshold must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self::uniform(Self::DEFAULT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantConfig {
    pub weight_bits: u32,
    /// Width of observation, activation and action integers.
    pub activation_bits: u32,
    /// Calibration maxima are multiplied by this before fitting scales.
    pub headroom: f64,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            weight_bits: 8,
            activation_bits: 16,
            headroom: 2.0,
        }
    }
}

impl QuantConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=16).contains(&self.weight_bits) {
            return Err(Error::Config(format!("weight_bits must be in [2, 16], got {}", self.weight_bits)));
        }
        if !(2..=24).contains(&self.activation_bits) {
            return Err(Error::Config(format!(
                "activation_bits must be in [2, 24], got {}",
                self.activation_bits
            )));
        }
        if !(self.headroom.is_finite() && self.headroom >= 1.0) {
            return Err(Error::Config(format!("headroom must be >= 1, got {}", self.headroom)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdnnMode {
    /// Same event-driven dataflow in floating point.
    Float,
    /// Integer-only execution.
    Quantized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    /// All layers propagate within a control tick.
    #[default]
    Flush,
    /// One layer hop per tick; actions lag by [`SdnnNet::pipeline_latency`].
    Pipelined,
}

/// Converted synaptic layer. Matrices are row-major `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdnnLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub relu: bool,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub weight_spec: QuantSpec,
    pub int_weights: Vec<i64>,
    /// Bias in accumulator units (`weight scale × input scale`).
    pub int_bias: Vec<i64>,
    /// Activation spec for hidden layers, action spec for the output layer.
    pub out_spec: QuantSpec,
    pub requant: Requant,
}

impl SdnnLayer {
    /// Largest `|dequantized − original|` over the weights.
    pub fn max_weight_error(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.int_weights)
            .map(|(&w, &q)| (q as f64 / self.weight_spec.scale() - w).abs())
            .fold(0.0, f64::max)
    }
}

/// Everything that defines a converted network, without runtime state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdnnParams {
    pub obs_spec: QuantSpec,
    pub layers: Vec<SdnnLayer>,
    pub thresholds: Thresholds,
    pub quant: QuantConfig,
}

impl SdnnParams {
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].in_dim];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        self.quant.validate()?;
        let n = self.layers.len();
        if n < 2 {
            return Err(Error::Integrity("sigma-delta net needs at least one hidden layer".into()));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if k > 0 && l.in_dim != self.layers[k - 1].out_dim {
                return Err(Error::DimensionMismatch {
                    context: "sdnn layer chain",
                    expected: self.layers[k - 1].out_dim,
                    got: l.in_dim,
                });
            }
            if l.relu != (k + 1 < n) {
                return Err(Error::Integrity(format!("layer {k} has the wrong activation")));
            }
            let len = l.in_dim * l.out_dim;
            if l.weights.len() != len || l.int_weights.len() != len || l.bias.len() != l.out_dim || l.int_bias.len() != l.out_dim {
                return Err(Error::Integrity(format!("layer {k} array lengths do not match its dims")));
            }
            if !l.int_weights.iter().all(|&q| l.weight_spec.contains(q)) {
                return Err(Error::Integrity(format!("layer {k} integer weight outside its spec")));
            }
            if !l.int_bias.iter().all(|&b| (i32::MIN as i64..=i32::MAX as i64).contains(&b)) {
                return Err(Error::Integrity(format!("layer {k} integer bias outside the accumulator")));
            }
            if !l.weights.iter().chain(&l.bias).all(|v| v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {k} parameters")));
            }
        }
        Ok(())
    }

    fn input_spec(&self, k: usize) -> &QuantSpec {
        if k == 0 {
            &self.obs_spec
        } else {
            &self.layers[k - 1].out_spec
        }
    }
}

/// Sigma-delta network: delta input layer, sigma-delta ReLU hidden layers and a
/// sigma output layer, runnable in float or integer arithmetic.
#[derive(Debug, Clone)]
pub struct SdnnNet<T: Scalar + EngineValue> {
    params: SdnnParams,
    mode: SdnnMode,
    exec: ExecMode,
    float: Engine<T>,
    int: Engine<i64>,
    counters: OpCounters,
    last_messages: u64,
}

/// Largest absolute value per layer output (hidden post-ReLU, output identity)
/// and over the inputs, across the calibration set.
fn calibration_maxima<T: Scalar>(actor: &DenseNet<T>, calibration: &[Vec<T>]) -> Result<(f64, Vec<f64>)> {
    let mut obs_max = 0.0f64;
    let mut maxima = vec![0.0f64; actor.layers().len()];
    for x in calibration {
        for v in x {
            obs_max = obs_max.max(v.to_f64_lossy().abs());
        }
        for (m, a) in maxima.iter_mut().zip(actor.activations(x)?) {
            for v in a {
                *m = m.max(v.to_f64_lossy().abs());
            }
        }
    }
    if !obs_max.is_finite() || maxima.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("calibration activations".into()));
    }
    Ok((obs_max, maxima))
}

/// Rounds into accumulator units, saturating to the 32-bit accumulator.
fn quantize_acc(x: f64, scale: f64) -> i64 {
    (x * scale).round().clamp(ACC_MIN as f64, ACC_MAX as f64) as i64
}

/// Converts a ReLU-hidden, identity-output actor. Scales come from the
/// calibration inputs; with an empty set every scale falls back to 1.
pub fn convert<T: Scalar + EngineValue>(
    actor: &DenseNet<T>,
    thresholds: Thresholds,
    quant: QuantConfig,
    calibration: &[Vec<T>],
) -> Result<SdnnNet<T>> {
    thresholds.validate()?;
    quant.validate()?;
    let layers = actor.layers();
    let n = layers.len();
    if n < 2 {
        return Err(Error::Conversion("actor needs at least one hidden layer".into()));
    }
    for (k, l) in layers.iter().enumerate() {
        let want = if k + 1 < n { Activation::Relu } else { Activation::Identity };
        if l.activation != want {
            return Err(Error::Conversion(format!(
                "layer {k} uses {:?}; sigma-delta conversion needs ReLU hidden layers and an identity output",
                l.activation
            )));
        }
    }
    if !actor.is_finite() {
        return Err(Error::NonFinite("actor parameters".into()));
    }
    let (obs_max, maxima) = calibration_maxima(actor, calibration)?;
    let obs_spec = QuantSpec::fit(quant.headroom * obs_max, quant.activation_bits)?;
    let mut in_spec = obs_spec;
    let mut out = Vec::with_capacity(n);
    for (l, &m) in layers.iter().zip(&maxima) {
        let weights: Vec<f64> = l.weights.iter().map(|w| w.to_f64_lossy()).collect();
        let bias: Vec<f64> = l.bias.iter().map(|b| b.to_f64_lossy()).collect();
        let w_max = weights.iter().fold(0.0f64, |a, w| a.max(w.abs()));
        let wq = QuantSpec::fit(w_max, quant.weight_bits)?;
        let out_spec = QuantSpec::fit(quant.headroom * m, quant.activation_bits)?;
        let acc_scale = wq.scale() * in_spec.scale();
        out.push(SdnnLayer {
            in_dim: l.in_dim,
            out_dim: l.out_dim,
            relu: l.activation == Activation::Relu,
            int_weights: weights.iter().map(|&w| wq.quantize(w)).collect(),
            int_bias: bias.iter().map(|&b| quantize_acc(b, acc_scale)).collect(),
            weights,
            bias,
            weight_spec: wq,
            requant: Requant::from_ratio(out_spec.scale() / acc_scale, &out_spec)?,
            out_spec,
        });
        in_spec = out_spec;
    }
    SdnnNet::from_params(SdnnParams { obs_spec, layers: out, thresholds, quant }, SdnnMode::Quantized)
}

impl<T: Scalar + EngineValue> SdnnNet<T> {
    pub fn from_params(params: SdnnParams, mode: SdnnMode) -> Result<Self> {
        params.validate()?;
        let (float, int) = Self::build_engines(&params);
        let counters = OpCounters::new(params.layers.len());
        Ok(Self {
            params,
            mode,
            exec: ExecMode::Flush,
            float,
            int,
            counters,
            last_messages: 0,
        })
    }

    fn build_engines(p: &SdnnParams) -> (Engine<T>, Engine<i64>) {
        let n = p.layers.len();
        let th = |k: usize| if k == 0 { p.thresholds.input } else { p.thresholds.hidden };
        let float_layers = p
            .layers
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let w: Vec<T> = l.weights.iter().map(|&v| T::lit(v)).collect();
                let delta = (k + 1 < n).then(|| DeltaState::new(l.out_dim, T::lit(th(k + 1))));
                EngineLayer::new(l.in_dim, l.out_dim, &w, l.bias.iter().map(|&v| T::lit(v)).collect(), delta, None)
            })
            .collect();
        let float_in = DeltaState::new(p.layers[0].in_dim, T::lit(th(0)));
        let int_layers = p
            .layers
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let delta = (k + 1 < n).then(|| {
                    DeltaState::new(l.out_dim, l.out_spec.quantize(th(k + 1))).with_max_spike(MAX_SPIKE)
                });
                EngineLayer::new(l.in_dim, l.out_dim, &l.int_weights, l.int_bias.clone(), delta, Some(l.requant))
            })
            .collect();
        let int_in = DeltaState::new(p.layers[0].in_dim, p.obs_spec.quantize(th(0))).with_max_spike(MAX_SPIKE);
        (Engine::new(float_in, float_layers), Engine::new(int_in, int_layers))
    }

    pub fn params(&self) -> &SdnnParams {
        &self.params
    }

    pub fn into_params(self) -> SdnnParams {
        self.params
    }

    pub fn dims(&self) -> Vec<usize> {
        self.params.dims()
    }

    pub fn mode(&self) -> SdnnMode {
        self.mode
    }

    pub fn exec_mode(&self) -> ExecMode {
        self.exec
    }

    pub fn with_mode(mut self, mode: SdnnMode) -> Self {
        self.mode = mode;
        self.reset_states();
        self
    }

    pub fn with_exec_mode(mut self, exec: ExecMode) -> Self {
        self.exec = exec;
        self.reset_states();
        self
    }

    pub fn thresholds(&self) -> Thresholds {
        self.params.thresholds
    }

    /// Replaces the thresholds and resets all state.
    pub fn set_thresholds(&mut self, thresholds: Thresholds) -> Result<()> {
        thresholds.validate()?;
        self.params.thresholds = thresholds;
        let (f, i) = Self::build_engines(&self.params);
        self.float = f;
        self.int = i;
        self.reset_states();
        Ok(())
    }

    /// Integer threshold per delta boundary (input first).
    pub fn integer_thresholds(&self) -> Vec<i64> {
        std::iter::once(self.int.input.threshold())
            .chain(self.int.layers.iter().filter_map(|l| l.delta.as_ref().map(|d| d.threshold())))
            .collect()
    }

    /// Widths of the delta-encoded boundaries, matching `OpCounters::messages`.
    pub fn boundary_widths(&self) -> Vec<usize> {
        let d = self.dims();
        d[..d.len() - 1].to_vec()
    }

    /// Layer-to-layer hops an observation takes before reaching the output:
    /// the number of hidden layers.
    pub fn pipeline_latency(&self) -> usize {
        self.params.layers.len() - 1
    }

    pub fn counters(&self) -> &OpCounters {
        &self.counters
    }

    /// Spikes emitted across all boundaries during the most recent step.
    pub fn last_step_messages(&self) -> u64 {
        self.last_messages
    }

    /// Zeroes delta references and pending spikes, reloads biases into the
    /// sigma accumulators and clears the counters. Weights are untouched.
    pub fn reset_states(&mut self) {
        self.float.reset();
        self.int.reset();
        self.counters.reset();
        self.last_messages = 0;
    }

    /// One control tick: observation in, action (network output units) out.
    pub fn step(&mut self, observation: &[T]) -> Result<Vec<T>> {
        let dim = self.params.layers[0].in_dim;
        if observation.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "sdnn observation",
                expected: dim,
                got: observation.len(),
            });
        }
        if !observation.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("sdnn observation".into()));
        }
        let pipelined = self.exec == ExecMode::Pipelined;
        let before = self.counters.total_messages();
        let out = match self.mode {
            SdnnMode::Float => {
                let y = self.float.step(observation, pipelined, &mut self.counters);
                if !y.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite("sdnn output".into()));
                }
                y
            }
            SdnnMode::Quantized => {
                let spec = self.params.obs_spec;
                let q: Vec<i64> = observation
                    .iter()
                    .map(|&x| {
                        let n = spec.quantize(x);
                        if (n == spec.max_int() || n == spec.min_int()) && spec.clamp_real(x.to_f64_lossy()) != x.to_f64_lossy() {
                            self.counters.overflows += 1;
                        }
                        n
                    })
                    .collect();
                let y = self.int.step(&q, pipelined, &mut self.counters);
                self.int.check_integrity((spec.min_int(), spec.max_int()))?;
                let action = &self.params.layers.last().expect("validated").out_spec;
                y.into_iter().map(|n| action.dequantize(n).map(T::lit)).collect::<Result<Vec<_>>>()?
            }
        };
        self.last_messages = self.counters.total_messages() - before;
        Ok(out)
    }

    /// Input scale of layer `k` (observation scale for the first layer).
    pub fn input_spec(&self, k: usize) -> QuantSpec {
        *self.params.input_spec(k)
    }
}
