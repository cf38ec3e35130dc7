use serde::{Deserialize, Serialize};

use super::Scalar;
use crate::{Error, Result};

/// Round half away from zero, so that `round(-x) == -round(x)`.
#[inline]
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

/// Symmetric linear fixed-point format: `scale` integer units per real unit,
/// integers confined to `[-2^(bits-1), 2^(bits-1) - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuantSpec")]
pub struct QuantSpec {
    scale: f64,
    magnitude_bits: u32,
}

#[derive(Deserialize)]
struct RawQuantSpec {
    scale: f64,
    magnitude_bits: u32,
}

impl TryFrom<RawQuantSpec> for QuantSpec {
    type Error = Error;
    fn try_from(r: RawQuantSpec) -> Result<Self> {
        QuantSpec::new(r.scale, r.magnitude_bits)
    }
}

impl QuantSpec {
    pub const MIN_BITS: u32 = 2;
    pub const MAX_BITS: u32 = 24;

    pub fn new(scale: f64, magnitude_bits: u32) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("quantization scale must be positive, got {scale}")));
        }
        if !(Self::MIN_BITS..=Self::MAX_BITS).contains(&magnitude_bits) {
            return Err(Error::Config(format!(
                "magnitude_bits must be in [{}, {}], got {magnitude_bits}",
                Self::MIN_BITS,
                Self::MAX_BITS
            )));
        }
        Ok(Self {
            scale,
            magnitude_bits,
        })
    }

    /// Scale that maps `max_abs` onto the largest representable integer.
    pub fn fit(max_abs: f64, magnitude_bits: u32) -> Result<Self> {
        let max_int = ((1i64 << (magnitude_bits.clamp(Self::MIN_BITS, Self::MAX_BITS) - 1)) - 1) as f64;
        let scale = if max_abs > 0.0 && max_abs.is_finite() {
            max_int / max_abs
        } else {
            1.0
        };
        Self::new(scale, magnitude_bits)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn magnitude_bits(&self) -> u32 {
        self.magnitude_bits
    }

    pub fn max_int(&self) -> i64 {
        (1i64 << (self.magnitude_bits - 1)) - 1
    }

    pub fn min_int(&self) -> i64 {
        -(1i64 << (self.magnitude_bits - 1))
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.min_int()..=self.max_int()).contains(&n)
    }

    /// `x` clamped to the real interval the integer range covers.
    pub fn clamp_real(&self, x: f64) -> f64 {
        x.clamp(self.min_int() as f64 / self.scale, self.max_int() as f64 / self.scale)
    }

    /// Rounds `x·scale` half away from zero and saturates to the representable range.
    /// Non-finite input saturates (NaN maps to zero).
    pub fn quantize<T: Scalar>(&self, x: T) -> i64 {
        let v = round_half_away(x.to_f64_lossy() * self.scale);
        if v.is_nan() {
            return 0;
        }
        if v >= self.max_int() as f64 {
            self.max_int()
        } else if v <= self.min_int() as f64 {
            self.min_int()
        } else {
            v as i64
        }
    }

    pub fn dequantize(&self, n: i64) -> Result<f64> {
        if !self.contains(n) {
            return Err(Error::Integrity(format!(
                "integer {n} outside {}-bit range",
                self.magnitude_bits
            )));
        }
        Ok(n as f64 / self.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> QuantSpec {
        QuantSpec::new(4096.0, 24).unwrap()
    }

    #[test]
    fn basic_values() {
        assert_eq!(spec().quantize(0.0), 0);
        assert_eq!(QuantSpec::new(3.0, 8).unwrap().quantize(0.0f32), 0);
        assert_eq!(spec().quantize(1.0), 4096);
        assert_eq!(spec().quantize(1e9), (1 << 23) - 1);
        assert_eq!(spec().quantize(-1e9), -(1 << 23));
        assert_eq!(spec().dequantize(0).unwrap(), 0.0);
        assert_eq!(spec().dequantize(4096).unwrap(), 1.0);
    }

    #[test]
    fn half_away_from_zero() {
        let s = QuantSpec::new(1.0, 8).unwrap();
        assert_eq!(s.quantize(2.5), 3);
        assert_eq!(s.quantize(-2.5), -3);
        assert_eq!(s.quantize(0.5), 1);
        assert_eq!(s.quantize(-0.5), -1);
        assert_eq!(s.quantize(0.49), 0);
    }

    #[test]
    fn out_of_range_dequantize_is_fault() {
        let s = QuantSpec::new(1.0, 8).unwrap();
        assert!(s.dequantize(127).is_ok());
        assert!(s.dequantize(-128).is_ok());
        assert!(matches!(s.dequantize(128), Err(Error::Integrity(_))));
        assert!(matches!(s.dequantize(-129), Err(Error::Integrity(_))));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(QuantSpec::new(0.0, 8).is_err());
        assert!(QuantSpec::new(-1.0, 8).is_err());
        assert!(QuantSpec::new(f64::NAN, 8).is_err());
        assert!(QuantSpec::new(1.0, 1).is_err());
        assert!(QuantSpec::new(1.0, 25).is_err());
        assert!(serde_json::from_str::<QuantSpec>(r#"{"scale":-2.0,"magnitude_bits":8}"#).is_err());
    }

    #[test]
    fn fit_maps_max_to_top_of_range() {
        let s = QuantSpec::fit(2.0, 8).unwrap();
        assert_eq!(s.quantize(2.0), 127);
        assert_eq!(s.quantize(-2.0), -127);
        assert_eq!(QuantSpec::fit(0.0, 8).unwrap().scale(), 1.0);
    }

    proptest! {
        #[test]
        fn round_trip_within_half_lsb(x in -1e4..1e4f64, scale in 0.5..1e5f64, bits in 2u32..=24) {
            let s = QuantSpec::new(scale, bits).unwrap();
            let back = s.dequantize(s.quantize(x)).unwrap();
            prop_assert!((back - s.clamp_real(x)).abs() <= 0.5 / scale * (1.0 + 1e-12));
        }

        #[test]
        fn monotone(a in -1e3..1e3f64, b in -1e3..1e3f64, bits in 2u32..=24) {
            let s = QuantSpec::new(37.5, bits).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(s.quantize(lo) <= s.quantize(hi));
        }

        #[test]
        fn odd_symmetric_inside_range(x in -100.0..100.0f64) {
            let s = spec();
            prop_assert_eq!(s.quantize(-x), -s.quantize(x));
        }
    }
}
