use crate::math::{Scalar, SeededRng};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// State-independent diagonal Gaussian over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHead<T> {
    log_std: Vec<T>,
}

impl<T: Scalar> GaussianHead<T> {
    pub fn new(log_std: Vec<T>) -> Self {
        let mut h = Self { log_std };
        h.clamp();
        h
    }

    pub fn constant(dim: usize, log_std: T) -> Self {
        Self::new(vec![log_std; dim])
    }

    pub fn dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn log_std(&self) -> &[T] {
        &self.log_std
    }

    /// Overwrites and re-clamps to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn set_log_std(&mut self, v: &[T]) {
        self.log_std.copy_from_slice(v);
        self.clamp();
    }

    fn clamp(&mut self) {
        let (lo, hi) = (T::lit(LOG_STD_MIN), T::lit(LOG_STD_MAX));
        self.log_std.iter_mut().for_each(|v| *v = v.max(lo).min(hi));
    }

    fn half_log_two_pi() -> T {
        T::lit(0.5 * std::f64::consts::TAU.ln())
    }

    pub fn log_prob(&self, mean: &[T], action: &[T]) -> T {
        debug_assert_eq!(mean.len(), self.dim());
        let mut lp = T::zero();
        for ((&m, &a), &ls) in mean.iter().zip(action).zip(&self.log_std) {
            let z = (a - m) / ls.exp();
            lp -= T::lit(0.5) * z * z + ls + Self::half_log_two_pi();
        }
        lp
    }

    /// `(∂ log p / ∂ mean, ∂ log p / ∂ log_std)`.
    pub fn log_prob_grads(&self, mean: &[T], action: &[T]) -> (Vec<T>, Vec<T>) {
        let mut dmean = Vec::with_capacity(self.dim());
        let mut dls = Vec::with_capacity(self.dim());
        for ((&m, &a), &ls) in mean.iter().zip(action).zip(&self.log_std) {
            let inv_var = (-(ls + ls)).exp();
            let d = a - m;
            dmean.push(d * inv_var);
            dls.push(d * d * inv_var - T::one());
        }
        (dmean, dls)
    }

    /// Differential entropy; its gradient w.r.t. each `log_std` is 1.
    pub fn entropy(&self) -> T {
        let c = T::lit(0.5) + Self::half_log_two_pi();
        self.log_std.iter().map(|&ls| ls + c).sum()
    }

    pub fn sample(&self, mean: &[T], rng: &mut SeededRng) -> Vec<T> {
        mean.iter()
            .zip(&self.log_std)
            .map(|(&m, &ls)| m + ls.exp() * rng.normal::<T>())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn density_at_mode() {
        let h = GaussianHead::constant(6, 0.0f64);
        let m = [0.3, -0.1, 0.0, 1.0, 2.0, -3.0];
        assert!((h.log_prob(&m, &m) + 3.0 * TAU.ln()).abs() < 1e-14);
    }

    #[test]
    fn unimodal() {
        let h = GaussianHead::constant(6, 0.5f64.ln());
        let m = [0.0; 6];
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let mut a = m;
            a[2] = k as f64 * 0.1;
            let lp = h.log_prob(&m, &a);
            assert!(lp < prev);
            prev = lp;
        }
    }

    #[test]
    fn slice_quadrature_matches_marginal() {
        // ∫ p(a) da_0 along a slice equals the 5-dim density of the other coordinates
        let h = GaussianHead::new(vec![-0.3, 0.2, -1.0, 0.0, 0.4, -0.7f64]);
        let mean = [0.1, -0.2, 0.3, 0.0, 0.5, -0.4];
        let mut a = [0.0, 0.1, 0.25, -0.3, 0.9, -0.5];
        let s0 = h.log_std()[0].exp();
        let (lo, hi, n) = (mean[0] - 12.0 * s0, mean[0] + 12.0 * s0, 4000);
        let step = (hi - lo) / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            a[0] = lo + i as f64 * step;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            integral += w * h.log_prob(&mean, &a).exp();
        }
        integral *= step / 3.0;
        let rest = GaussianHead::new(h.log_std()[1..].to_vec());
        let expected = rest.log_prob(&mean[1..], &a[1..]).exp();
        assert!((integral - expected).abs() < 1e-6, "{integral} vs {expected}");
    }

    #[test]
    fn analytic_grads_match_finite_differences() {
        let h = GaussianHead::new(vec![-0.3, 0.2, 0.1f64]);
        let mean = [0.1, -0.2, 0.3];
        let act = [0.4, 0.0, -0.6];
        let (dm, dl) = h.log_prob_grads(&mean, &act);
        let eps = 1e-6;
        for i in 0..3 {
            let (mut mp, mut mm) = (mean, mean);
            mp[i] += eps;
            mm[i] -= eps;
            let fd = (h.log_prob(&mp, &act) - h.log_prob(&mm, &act)) / (2.0 * eps);
            assert!((fd - dm[i]).abs() < 1e-7);
            let (mut lp, mut lm) = (h.log_std().to_vec(), h.log_std().to_vec());
            lp[i] += eps;
            lm[i] -= eps;
            let fd = (GaussianHead::new(lp).log_prob(&mean, &act) - GaussianHead::new(lm).log_prob(&mean, &act)) / (2.0 * eps);
            assert!((fd - dl[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn log_std_is_clamped() {
        let h = GaussianHead::new(vec![-50.0, 10.0, 0.0f64]);
        assert_eq!(h.log_std(), &[LOG_STD_MIN, LOG_STD_MAX, 0.0]);
    }
}
