//! Numeric foundations shared by every other module: scalar abstraction,
//! 3-vectors, unit quaternions, fixed-point quantization and a portable
//! seeded generator.

mod quant;
mod quat;
mod rng;
mod scalar;
mod vec3;

pub use quant::{round_half_away, QuantSpec};
pub use quat::{integrate_quat, quat_angle_deg, quat_error_rotvec, UnitQuat};
pub use rng::SeededRng;
pub use scalar::Scalar;
pub use vec3::Vec3;
