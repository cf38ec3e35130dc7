use super::{DenseNet, GaussianHead};
use crate::math::{Scalar, SeededRng};
use crate::{Error, Result};

/// Actor: dense mean network plus state-independent Gaussian exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet<T> {
    pub net: DenseNet<T>,
    pub head: GaussianHead<T>,
}

impl<T: Scalar> PolicyNet<T> {
    pub fn new(net: DenseNet<T>, head: GaussianHead<T>) -> Result<Self> {
        if net.output_dim() != head.dim() {
            return Err(Error::DimensionMismatch {
                context: "gaussian head",
                expected: net.output_dim(),
                got: head.dim(),
            });
        }
        Ok(Self { net, head })
    }

    /// Greedy action (the distribution mean).
    pub fn mean(&self, obs: &[T]) -> Result<Vec<T>> {
        self.net.predict(obs)
    }

    pub fn sample(&self, obs: &[T], rng: &mut SeededRng) -> Result<(Vec<T>, T)> {
        let mean = self.mean(obs)?;
        let a = self.head.sample(&mean, rng);
        let lp = self.head.log_prob(&mean, &a);
        Ok((a, lp))
    }

    /// Network parameters followed by `log_std`.
    pub fn params_flat(&self) -> Vec<T> {
        let mut p = self.net.params_flat();
        p.extend_from_slice(self.head.log_std());
        p
    }

    pub fn set_params_flat(&mut self, flat: &[T]) -> Result<()> {
        let n = self.net.num_params();
        if flat.len() != n + self.head.dim() {
            return Err(Error::DimensionMismatch {
                context: "policy parameters",
                expected: n + self.head.dim(),
                got: flat.len(),
            });
        }
        self.net.set_params_flat(&flat[..n])?;
        self.head.set_log_std(&flat[n..]);
        Ok(())
    }
}
