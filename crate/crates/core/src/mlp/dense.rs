use serde::{Deserialize, Serialize};

use crate::math::{Scalar, SeededRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Tanh,
    Elu,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Elu => {
                if z > T::zero() {
                    z
                } else {
                    z.exp_m1()
                }
            }
        }
    }

    /// Derivative with respect to the pre-activation. ReLU uses 0 at the kink.
    #[inline]
    pub fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Identity => T::one(),
            Activation::Tanh => {
                let t = z.tanh();
                T::one() - t * t
            }
            Activation::Elu => {
                if z > T::zero() {
                    T::one()
                } else {
                    z.exp()
                }
            }
        }
    }
}

/// Fully connected layer. `weights` is row-major `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
            activation,
        }
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> T {
        self.weights[row * self.in_dim + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[T] {
        &self.weights[row * self.in_dim..(row + 1) * self.in_dim]
    }

    fn check(&self) -> Result<()> {
        if self.weights.len() != self.in_dim * self.out_dim {
            return Err(Error::DimensionMismatch {
                context: "layer weights",
                expected: self.in_dim * self.out_dim,
                got: self.weights.len(),
            });
        }
        if self.bias.len() != self.out_dim {
            return Err(Error::DimensionMismatch {
                context: "layer bias",
                expected: self.out_dim,
                got: self.bias.len(),
            });
        }
        if !self.weights.iter().chain(&self.bias).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("layer parameters".into()));
        }
        Ok(())
    }

    /// Pre-activation `W·x + b` into `out`.
    #[inline]
    fn affine(&self, x: &[T], out: &mut Vec<T>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(j, &b)| {
            let row = self.row(j);
            let mut acc = b;
            for i in 0..self.in_dim {
                acc += row[i] * x[i];
            }
            acc
        }));
    }

    /// Fills with an orthogonal matrix scaled by `gain` (rows orthonormal when
    /// `out <= in`, columns otherwise). Bias is zeroed.
    pub fn init_orthogonal(&mut self, gain: T, rng: &mut SeededRng) {
        let (rows, cols) = (self.out_dim, self.in_dim);
        let transpose = rows > cols;
        let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        while basis.len() < n {
            let mut v: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
            for b in &basis {
                let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
                v.iter_mut().zip(b).for_each(|(a, c)| *a -= d * c);
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-8 {
                v.iter_mut().for_each(|a| *a /= norm);
                basis.push(v);
            }
        }
        for r in 0..rows {
            for c in 0..cols {
                let v = if transpose { basis[c][r] } else { basis[r][c] };
                self.weights[r * cols + c] = gain * T::lit(v);
            }
        }
        self.bias.iter_mut().for_each(|b| *b = T::zero());
    }
}

/// Feed-forward network; each layer carries its own activation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet<T> {
    layers: Vec<DenseLayer<T>>,
}

/// Intermediate values of one forward pass, consumed by [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    dims: Vec<usize>,
    /// Input to each layer; `inputs[0]` is the network input.
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
}

impl<T> ForwardCache<T> {
    pub fn pre_activations(&self) -> &[Vec<T>] {
        &self.pre
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Partials for every network parameter plus (for policies) the Gaussian `log_std`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<T> {
    pub layers: Vec<LayerGrad<T>>,
    pub log_std: Vec<T>,
}

impl<T: Scalar> GradientSet<T> {
    pub fn zeros_for(net: &DenseNet<T>, log_std_dim: usize) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![T::zero(); l.weights.len()],
                    bias: vec![T::zero(); l.bias.len()],
                })
                .collect(),
            log_std: vec![T::zero(); log_std_dim],
        }
    }

    fn values(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .chain(&self.log_std)
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
            .chain(self.log_std.iter_mut())
    }

    /// Flattened in the same order as [`DenseNet::params_flat`] followed by `log_std`.
    pub fn flat(&self) -> Vec<T> {
        self.values().copied().collect()
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.values_mut().zip(other.values()).for_each(|(a, &b)| *a += b);
    }

    pub fn scale(&mut self, s: T) {
        self.values_mut().for_each(|a| *a *= s);
    }

    pub fn norm(&self) -> T {
        self.values().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| *v == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }
}

impl<T: Scalar> DenseNet<T> {
    pub fn from_layers(layers: Vec<DenseLayer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for l in &layers {
            l.check()?;
        }
        for w in layers.windows(2) {
            if w[0].out_dim != w[1].in_dim {
                return Err(Error::DimensionMismatch {
                    context: "layer chaining",
                    expected: w[0].out_dim,
                    got: w[1].in_dim,
                });
            }
        }
        Ok(Self { layers })
    }

    /// All-zero network with `hidden` activation on inner layers and identity output.
    pub fn zeros(dims: &[usize], hidden: Activation) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config("network needs at least input and output dims".into()));
        }
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|k| {
                let act = if k + 1 == n { Activation::Identity } else { hidden };
                DenseLayer::zeros(dims[k], dims[k + 1], act)
            })
            .collect();
        Self::from_layers(layers)
    }

    /// Orthogonal init: `hidden_gain` on inner layers, `output_gain` on the last.
    pub fn orthogonal(
        dims: &[usize],
        hidden: Activation,
        hidden_gain: T,
        output_gain: T,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        let mut net = Self::zeros(dims, hidden)?;
        let n = net.layers.len();
        for (k, l) in net.layers.iter_mut().enumerate() {
            l.init_orthogonal(if k + 1 == n { output_gain } else { hidden_gain }, rng);
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].in_dim)
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Output only, no cache.
    pub fn predict(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut z = Vec::new();
        for l in &self.layers {
            l.affine(&x, &mut z);
            x.clear();
            x.extend(z.iter().map(|&v| l.activation.apply(v)));
        }
        Ok(x)
    }

    /// Hidden activations (post-activation) of every layer, including the output.
    pub fn activations(&self, input: &[T]) -> Result<Vec<Vec<T>>> {
        let (_, cache) = self.forward(input)?;
        let mut acts: Vec<Vec<T>> = cache.inputs[1..].to_vec();
        let last = self.layers.last().unwrap();
        acts.push(
            cache.pre.last().unwrap().iter().map(|&v| last.activation.apply(v)).collect(),
        );
        Ok(acts)
    }

    pub fn forward(&self, input: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
        self.check_input(input)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        for l in &self.layers {
            let mut z = Vec::with_capacity(l.out_dim);
            l.affine(&x, &mut z);
            let a = z.iter().map(|&v| l.activation.apply(v)).collect();
            inputs.push(std::mem::replace(&mut x, a));
            pre.push(z);
        }
        let cache = ForwardCache {
            dims: self.layer_dims(),
            inputs,
            pre,
        };
        Ok((x, cache))
    }

    /// Gradients of a scalar loss given `dL/d(output)`.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_out: &[T]) -> Result<GradientSet<T>> {
        let mut g = GradientSet::zeros_for(self, 0);
        self.backward_accumulate(cache, grad_out, &mut g)?;
        Ok(g)
    }

    /// Adds this sample's parameter gradients into `acc`; returns `dL/d(input)`.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache<T>,
        grad_out: &[T],
        acc: &mut GradientSet<T>,
    ) -> Result<Vec<T>> {
        if cache.dims != self.layer_dims() || cache.pre.len() != self.layers.len() {
            return Err(Error::CacheMismatch);
        }
        if grad_out.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: self.output_dim(),
                got: grad_out.len(),
            });
        }
        let mut delta: Vec<T> = grad_out.to_vec();
        for k in (0..self.layers.len()).rev() {
            let l = &self.layers[k];
            let x = &cache.inputs[k];
            for (d, &z) in delta.iter_mut().zip(&cache.pre[k]) {
                *d *= l.activation.derivative(z);
            }
            let lg = &mut acc.layers[k];
            let mut grad_in = vec![T::zero(); l.in_dim];
            for (j, &dj) in delta.iter().enumerate() {
                if dj == T::zero() {
                    continue;
                }
                lg.bias[j] += dj;
                let row = l.row(j);
                let grow = &mut lg.weights[j * l.in_dim..(j + 1) * l.in_dim];
                for i in 0..l.in_dim {
                    grow[i] += dj * x[i];
                    grad_in[i] += dj * row[i];
                }
            }
            delta = grad_in;
        }
        Ok(delta)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Layer by layer: weights (row-major) then bias.
    pub fn params_flat(&self) -> Vec<T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .copied()
            .collect()
    }

    pub fn set_params_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                context: "flat parameters",
                expected: self.num_params(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter();
        for l in &mut self.layers {
            for p in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *p = *it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn cast<U: Scalar>(&self) -> DenseNet<U> {
        let c = |v: &Vec<T>| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect();
        DenseNet {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    weights: c(&l.weights),
                    bias: c(&l.bias),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}
