use std::fmt::Debug;

use num_traits::Signed;

use crate::{Error, Result};

/// Values carried by delta/sigma state: the float scalar in reference mode,
/// `i64` in quantized mode.
pub trait SdValue: Signed + Copy + PartialOrd + Debug + Send + Sync + 'static {}

impl SdValue for f32 {}
impl SdValue for f64 {}
impl SdValue for i64 {}

/// Sparse graded-spike message: `(index, value)` pairs, indices strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeVector<V> {
    dim: usize,
    spikes: Vec<(u32, V)>,
}

impl<V: SdValue> SpikeVector<V> {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            spikes: Vec::new(),
        }
    }

    /// Builds from pairs; indices must be unique, sorted and below `dim`.
    pub fn from_pairs(dim: usize, spikes: Vec<(u32, V)>) -> Result<Self> {
        let sorted = spikes.windows(2).all(|w| w[0].0 < w[1].0);
        if !sorted || spikes.last().is_some_and(|s| s.0 as usize >= dim) {
            return Err(Error::Integrity("spike indices must be sorted, unique and in range".into()));
        }
        Ok(Self { dim, spikes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, V)> + '_ {
        self.spikes.iter().map(|&(i, v)| (i as usize, v))
    }

    pub fn pairs(&self) -> &[(u32, V)] {
        &self.spikes
    }
}

/// Delta encoder: emits `d = x − x_ref` for a component when `d ≠ 0` and
/// `|d| ≥ threshold` (firing at equality), then `x_ref += s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaState<V> {
    x_ref: Vec<V>,
    threshold: V,
    /// Largest spike magnitude; larger differences are sent over several steps.
    max_spike: Option<V>,
}

impl<V: SdValue> DeltaState<V> {
    pub fn new(dim: usize, threshold: V) -> Self {
        Self {
            x_ref: vec![V::zero(); dim],
            threshold: threshold.abs(),
            max_spike: None,
        }
    }

    pub fn with_max_spike(mut self, max: V) -> Self {
        self.max_spike = Some(max.abs());
        self
    }

    pub fn threshold(&self) -> V {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: V) {
        self.threshold = threshold.abs();
    }

    pub fn reference(&self) -> &[V] {
        &self.x_ref
    }

    pub fn reset(&mut self) {
        self.x_ref.iter_mut().for_each(|v| *v = V::zero());
    }

    pub fn encode(&mut self, x: &[V]) -> SpikeVector<V> {
        debug_assert_eq!(x.len(), self.x_ref.len());
        let mut spikes = Vec::new();
        for (i, (&xi, r)) in x.iter().zip(self.x_ref.iter_mut()).enumerate() {
            let d = xi - *r;
            if d == V::zero() || d.abs() < self.threshold {
                continue;
            }
            let s = match self.max_spike {
                Some(m) if d > m => m,
                Some(m) if d < -m => -m,
                _ => d,
            };
            *r = *r + s;
            spikes.push((i as u32, s));
        }
        SpikeVector {
            dim: self.x_ref.len(),
            spikes,
        }
    }
}

/// Sigma decoder: running sum of received messages.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaState<V> {
    x_rec: Vec<V>,
}

impl<V: SdValue> SigmaState<V> {
    pub fn new(dim: usize) -> Self {
        Self {
            x_rec: vec![V::zero(); dim],
        }
    }

    pub fn value(&self) -> &[V] {
        &self.x_rec
    }

    pub fn value_mut(&mut self) -> &mut [V] {
        &mut self.x_rec
    }

    pub fn reset(&mut self) {
        self.x_rec.iter_mut().for_each(|v| *v = V::zero());
    }

    pub fn set(&mut self, values: &[V]) {
        self.x_rec.copy_from_slice(values);
    }

    /// `x_rec[i] += s_i` for every message.
    pub fn decode(&mut self, s: &SpikeVector<V>) -> Result<&[V]> {
        for (i, v) in s.iter() {
            let slot = self
                .x_rec
                .get_mut(i)
                .ok_or_else(|| Error::Integrity(format!("spike index {i} outside sigma of dim {}", s.dim())))?;
            *slot = *slot + v;
        }
        Ok(&self.x_rec)
    }
}
