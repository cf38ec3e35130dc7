//! Free-flyer control pipeline: PPO training of a ReLU actor, conversion to a
//! sigma-delta network with integer-only event-driven inference, and
//! closed-loop evaluation of both controllers.
//!
//! The numeric core is generic over [`math::Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common `f64` pipeline.

pub mod error;
pub mod eval;
pub mod flyer;
pub mod io;
pub mod math;
pub mod mlp;
pub mod pipeline;
pub mod ppo;
pub mod sdnn;

pub use error::{Error, Result};

pub type Vec3d = math::Vec3<f64>;
pub type UnitQuatd = math::UnitQuat<f64>;
pub type DenseNetF64 = mlp::DenseNet<f64>;
pub type DenseNetF32 = mlp::DenseNet<f32>;
pub type PolicyNetF64 = mlp::PolicyNet<f64>;
pub type FlyerStateF64 = flyer::FlyerState<f64>;
pub type FlyerParamsF64 = flyer::FlyerParams<f64>;
pub type SdnnNetF64 = sdnn::SdnnNet<f64>;
pub type SdnnNetF32 = sdnn::SdnnNet<f32>;
