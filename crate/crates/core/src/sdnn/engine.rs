use serde::{Deserialize, Serialize};

use super::counters::OpCounters;
use super::encoding::{DeltaState, SdValue, SigmaState, SpikeVector};
use crate::math::QuantSpec;
use crate::{Error, Result};

/// Largest graded-spike magnitude in quantized mode (24-bit signed payload).
pub const MAX_SPIKE: i64 = (1 << 23) - 1;
pub const ACC_MIN: i64 = i32::MIN as i64;
pub const ACC_MAX: i64 = i32::MAX as i64;

/// Integer rescale `y = round(x · multiplier / 2^shift)` (half away from zero),
/// saturated to `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requant {
    pub multiplier: i64,
    pub shift: u32,
    pub min: i64,
    pub max: i64,
}

impl Requant {
    /// Multiplier normalized into `[2^14, 2^15)` where the ratio allows.
    pub fn from_ratio(ratio: f64, target: &QuantSpec) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::Conversion(format!("rescale ratio must be positive, got {ratio}")));
        }
        let mut shift = 0u32;
        while ratio * 2f64.powi(shift as i32) < (1u64 << 14) as f64 && shift < 62 {
            shift += 1;
        }
        let multiplier = (ratio * 2f64.powi(shift as i32)).round() as i64;
        if multiplier <= 0 || multiplier > i32::MAX as i64 {
            return Err(Error::Conversion(format!("rescale ratio {ratio} not representable")));
        }
        Ok(Self {
            multiplier,
            shift,
            min: target.min_int(),
            max: target.max_int(),
        })
    }

    pub fn ratio(&self) -> f64 {
        self.multiplier as f64 / 2f64.powi(self.shift as i32)
    }

    /// Returns the rescaled value and whether it saturated.
    pub fn apply(&self, x: i64) -> (i64, bool) {
        let p = x as i128 * self.multiplier as i128;
        let y = if self.shift == 0 {
            p
        } else {
            let half = 1i128 << (self.shift - 1);
            if p >= 0 {
                (p + half) >> self.shift
            } else {
                -((-p + half) >> self.shift)
            }
        };
        if y > self.max as i128 {
            (self.max, true)
        } else if y < self.min as i128 {
            (self.min, true)
        } else {
            (y as i64, false)
        }
    }
}

/// Arithmetic that differs between the float reference and the integer runtime.
pub trait EngineValue: SdValue {
    /// `acc + w·s`, plus a saturation flag.
    fn mac(acc: Self, w: Self, s: Self) -> (Self, bool);
    /// Maps an accumulator into the next boundary's units.
    fn rescale(acc: Self, r: Option<&Requant>) -> (Self, bool);
}

macro_rules! float_engine_value {
    ($t:ty) => {
        impl EngineValue for $t {
            #[inline]
            fn mac(acc: Self, w: Self, s: Self) -> (Self, bool) {
                (acc + w * s, false)
            }
            #[inline]
            fn rescale(acc: Self, _: Option<&Requant>) -> (Self, bool) {
                (acc, false)
            }
        }
    };
}
float_engine_value!(f32);
float_engine_value!(f64);

impl EngineValue for i64 {
    #[inline]
    fn mac(acc: Self, w: Self, s: Self) -> (Self, bool) {
        let v = acc + w * s;
        if v > ACC_MAX {
            (ACC_MAX, true)
        } else if v < ACC_MIN {
            (ACC_MIN, true)
        } else {
            (v, false)
        }
    }

    #[inline]
    fn rescale(acc: Self, r: Option<&Requant>) -> (Self, bool) {
        match r {
            Some(r) => r.apply(acc),
            None => (acc, false),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EngineLayer<V> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Fan-out layout `in_dim × out_dim`: row `i` holds the synapses leaving input `i`.
    pub fanout: Vec<V>,
    pub bias: Vec<V>,
    pub sigma: SigmaState<V>,
    /// Present for hidden (sigma-delta ReLU) layers.
    pub delta: Option<DeltaState<V>>,
    pub requant: Option<Requant>,
    activation: Vec<V>,
}

impl<V: EngineValue> EngineLayer<V> {
    /// `weights` is row-major `out_dim × in_dim`.
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: &[V],
        bias: Vec<V>,
        delta: Option<DeltaState<V>>,
        requant: Option<Requant>,
    ) -> Self {
        let mut fanout = vec![V::zero(); in_dim * out_dim];
        for j in 0..out_dim {
            for i in 0..in_dim {
                fanout[i * out_dim + j] = weights[j * in_dim + i];
            }
        }
        let mut layer = Self {
            in_dim,
            out_dim,
            fanout,
            bias,
            sigma: SigmaState::new(out_dim),
            delta,
            requant,
            activation: vec![V::zero(); out_dim],
        };
        layer.reset();
        layer
    }

    /// Sigma holds the bias from the start; delta references go to zero.
    pub fn reset(&mut self) {
        self.sigma.set(&self.bias);
        if let Some(d) = self.delta.as_mut() {
            d.reset();
        }
    }

    fn accumulate(&mut self, s: &SpikeVector<V>, c: &mut OpCounters) {
        if s.is_empty() {
            return;
        }
        let acc = self.sigma.value_mut();
        for (i, v) in s.iter() {
            let row = &self.fanout[i * self.out_dim..(i + 1) * self.out_dim];
            for (a, &w) in acc.iter_mut().zip(row) {
                let (n, sat) = V::mac(*a, w, v);
                *a = n;
                c.overflows += sat as u64;
            }
        }
        c.synops += (s.len() * self.out_dim) as u64;
        c.neuron_updates += self.out_dim as u64;
    }

    /// Hidden layer: ReLU of the reconstruction, rescaled and delta encoded.
    fn emit(&mut self, c: &mut OpCounters) -> SpikeVector<V> {
        for (a, &z) in self.activation.iter_mut().zip(self.sigma.value()) {
            let relu = if z > V::zero() { z } else { V::zero() };
            let (y, sat) = V::rescale(relu, self.requant.as_ref());
            c.overflows += sat as u64;
            *a = y;
        }
        self.delta.as_mut().expect("hidden layer has a delta encoder").encode(&self.activation)
    }

    fn output(&self, c: &mut OpCounters) -> Vec<V> {
        self.sigma
            .value()
            .iter()
            .map(|&z| {
                let (y, sat) = V::rescale(z, self.requant.as_ref());
                c.overflows += sat as u64;
                y
            })
            .collect()
    }
}

/// Delta input, sigma-delta ReLU hidden layers, sigma output.
#[derive(Debug, Clone)]
pub(crate) struct Engine<V> {
    pub input: DeltaState<V>,
    pub layers: Vec<EngineLayer<V>>,
    /// Pipelined mode: spikes produced last tick, waiting for layer `k`.
    pending: Vec<SpikeVector<V>>,
}

impl<V: EngineValue> Engine<V> {
    pub fn new(input: DeltaState<V>, layers: Vec<EngineLayer<V>>) -> Self {
        let pending = layers.iter().map(|l| SpikeVector::empty(l.in_dim)).collect();
        Self {
            input,
            layers,
            pending,
        }
    }

    pub fn reset(&mut self) {
        self.input.reset();
        for l in &mut self.layers {
            l.reset();
        }
        for (p, l) in self.pending.iter_mut().zip(&self.layers) {
            *p = SpikeVector::empty(l.in_dim);
        }
    }

    pub fn dense_macs(&self) -> u64 {
        self.layers.iter().map(|l| (l.in_dim * l.out_dim) as u64).sum()
    }

    /// One control tick. Returns the output layer in action units.
    pub fn step(&mut self, x: &[V], pipelined: bool, c: &mut OpCounters) -> Vec<V> {
        let n = self.layers.len();
        let s0 = self.input.encode(x);
        c.messages[0] += s0.len() as u64;
        if pipelined {
            let mut waiting = std::mem::take(&mut self.pending);
            waiting[0] = s0;
            self.pending = self.layers.iter().map(|l| SpikeVector::empty(l.in_dim)).collect();
            for (k, s) in waiting.iter().enumerate().take(n - 1) {
                let layer = &mut self.layers[k];
                layer.accumulate(s, c);
                let out = layer.emit(c);
                c.messages[k + 1] += out.len() as u64;
                self.pending[k + 1] = out;
            }
            self.layers[n - 1].accumulate(&waiting[n - 1], c);
        } else {
            let mut s = s0;
            for k in 0..n - 1 {
                let layer = &mut self.layers[k];
                layer.accumulate(&s, c);
                s = layer.emit(c);
                c.messages[k + 1] += s.len() as u64;
            }
            self.layers[n - 1].accumulate(&s, c);
        }
        c.steps += 1;
        c.dense_macs += self.dense_macs();
        self.layers[n - 1].output(c)
    }
}

impl Engine<i64> {
    /// Every stored state is an integer within its declared range.
    pub fn check_integrity(&self, input_range: (i64, i64)) -> Result<()> {
        let within = |v: &[i64], (lo, hi): (i64, i64), what: &str| {
            match v.iter().find(|&&x| x < lo || x > hi) {
                Some(x) => Err(Error::Integrity(format!("{what} value {x} outside [{lo}, {hi}]"))),
                None => Ok(()),
            }
        };
        within(self.input.reference(), input_range, "input reference")?;
        for (k, l) in self.layers.iter().enumerate() {
            within(l.sigma.value(), (ACC_MIN, ACC_MAX), "accumulator")?;
            if let (Some(d), Some(r)) = (&l.delta, &l.requant) {
                within(d.reference(), (r.min, r.max), "activation reference")?;
            }
            within(self.pending[k].pairs().iter().map(|p| p.1).collect::<Vec<_>>().as_slice(), (-MAX_SPIKE, MAX_SPIKE), "spike")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn requant_rounding() {
        let target = QuantSpec::new(1.0, 16).unwrap();
        let r = Requant { multiplier: 1, shift: 1, min: target.min_int(), max: target.max_int() };
        assert_eq!(r.apply(3), (2, false));
        assert_eq!(r.apply(-3), (-2, false));
        assert_eq!(r.apply(2), (1, false));
        assert_eq!(r.apply(100_000), (32767, true));
        assert_eq!(r.apply(-100_000), (-32768, true));
    }

    #[test]
    fn accumulator_saturates() {
        assert_eq!(i64::mac(ACC_MAX - 1, 10, 10), (ACC_MAX, true));
        assert_eq!(i64::mac(ACC_MIN + 1, 10, -10), (ACC_MIN, true));
        assert_eq!(i64::mac(5, 3, -2), (-1, false));
    }

    proptest! {
        #[test]
        fn requant_tracks_ratio(ratio in 1e-6..1e3f64, x in -1_000_000i64..1_000_000) {
            let target = QuantSpec::new(1.0, 24).unwrap();
            let r = Requant::from_ratio(ratio, &target).unwrap();
            prop_assert!((r.ratio() / ratio - 1.0).abs() < 1e-4);
            let (y, sat) = r.apply(x);
            if !sat {
                prop_assert!((y as f64 - x as f64 * r.ratio()).abs() <= 0.5 + 1e-9);
            }
        }
    }
}
