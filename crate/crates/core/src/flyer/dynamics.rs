use serde::{Deserialize, Serialize};

use crate::math::{integrate_quat, quat_error_rotvec, Scalar, UnitQuat, Vec3};
use crate::{Error, Result};

pub const OBS_DIM: usize = 12;
pub const ACT_DIM: usize = 6;

/// `[lin_vel (world), ang_vel (body), pos_err (world), orient_err rotvec]`.
pub type Observation<T> = [T; OBS_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlyerParams<T> {
    /// kg
    pub mass: T,
    /// Principal moments, kg·m².
    pub inertia_diag: Vec3<T>,
    /// N, per body axis.
    pub force_limit: T,
    /// N·m, per body axis.
    pub torque_limit: T,
    /// s
    pub dt: T,
    pub episode_len: usize,
}

impl<T: Scalar> Default for FlyerParams<T> {
    fn default() -> Self {
        Self {
            mass: T::lit(9.58),
            inertia_diag: Vec3::new(T::lit(0.153), T::lit(0.143), T::lit(0.162)),
            force_limit: T::lit(0.85),
            torque_limit: T::lit(0.1),
            dt: T::lit(0.1),
            episode_len: 200,
        }
    }
}

impl<T: Scalar> FlyerParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.mass,
            self.inertia_diag.x,
            self.inertia_diag.y,
            self.inertia_diag.z,
            self.force_limit,
            self.torque_limit,
            self.dt,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > T::zero())) || self.episode_len == 0 {
            return Err(Error::Config("flyer parameters must all be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlyerState<T> {
    pub position: Vec3<T>,
    pub orientation: UnitQuat<T>,
    /// World frame.
    pub lin_vel: Vec3<T>,
    /// Body frame.
    pub ang_vel: Vec3<T>,
}

impl<T: Scalar> FlyerState<T> {
    pub fn at_rest() -> Self {
        Self {
            position: Vec3::zero(),
            orientation: UnitQuat::identity(),
            lin_vel: Vec3::zero(),
            ang_vel: Vec3::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.orientation.is_finite()
            && self.lin_vel.is_finite()
            && self.ang_vel.is_finite()
    }

    /// World-frame angular momentum `R(q)·I·ω`.
    pub fn angular_momentum(&self, params: &FlyerParams<T>) -> Vec3<T> {
        self.orientation.rotate(params.inertia_diag.hadamard(self.ang_vel))
    }

    pub fn linear_momentum(&self, params: &FlyerParams<T>) -> Vec3<T> {
        self.lin_vel * params.mass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalPose<T> {
    pub position: Vec3<T>,
    pub orientation: UnitQuat<T>,
}

/// Body-frame force and torque.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action<T> {
    pub force: Vec3<T>,
    pub torque: Vec3<T>,
}

impl<T: Scalar> Action<T> {
    pub fn zero() -> Self {
        Self {
            force: Vec3::zero(),
            torque: Vec3::zero(),
        }
    }

    /// Squashes raw network outputs with `tanh` and scales by the limits.
    pub fn from_network(out: &[T], params: &FlyerParams<T>) -> Self {
        debug_assert_eq!(out.len(), ACT_DIM);
        let f = |i: usize| out[i].tanh() * params.force_limit;
        let t = |i: usize| out[i].tanh() * params.torque_limit;
        Self {
            force: Vec3::new(f(0), f(1), f(2)),
            torque: Vec3::new(t(3), t(4), t(5)),
        }
    }

    pub fn clamped(&self, params: &FlyerParams<T>) -> Self {
        let c = |lim: T| move |v: T| v.max(-lim).min(lim);
        Self {
            force: self.force.map(c(params.force_limit)),
            torque: self.torque.map(c(params.torque_limit)),
        }
    }

    /// Components divided by their limits.
    pub fn normalized(&self, params: &FlyerParams<T>) -> [T; ACT_DIM] {
        let f = self.force / params.force_limit;
        let t = self.torque / params.torque_limit;
        [f.x, f.y, f.z, t.x, t.y, t.z]
    }

    pub fn to_array(&self) -> [T; ACT_DIM] {
        [
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.force.is_finite() && self.torque.is_finite()
    }
}

/// One semi-implicit Euler step.
///
/// Velocities are updated first: `v += R(q)·F/m·dt` and the world-frame
/// angular momentum `L = R(q)·I·ω` gains `R(q)·τ·dt`. The body rate used for
/// the attitude update is `I⁻¹·R(q)ᵀ·L`, and the stored rate after the update
/// is re-derived from `L` at the new attitude, so torque-free motion keeps `L`
/// constant to rounding. Position then advances with the new velocity.
pub fn step<T: Scalar>(
    state: &FlyerState<T>,
    action: &Action<T>,
    params: &FlyerParams<T>,
) -> Result<FlyerState<T>> {
    if !action.is_finite() {
        return Err(Error::NonFinite("action".into()));
    }
    let a = action.clamped(params);
    let q = state.orientation;
    let dt = params.dt;
    let inertia = params.inertia_diag;

    let lin_vel = state.lin_vel + q.rotate(a.force) * (dt / params.mass);
    let momentum = q.rotate(inertia.hadamard(state.ang_vel)) + q.rotate(a.torque) * dt;
    let omega_mid = q.rotate_inv(momentum).hadamard_div(inertia);
    let orientation = integrate_quat(&q, omega_mid, dt);
    let ang_vel = orientation.rotate_inv(momentum).hadamard_div(inertia);
    let position = state.position + lin_vel * dt;

    let next = FlyerState {
        position,
        orientation,
        lin_vel,
        ang_vel,
    };
    if !next.is_finite() {
        return Err(Error::NonFinite(format!("flyer state after step: {next:?}")));
    }
    Ok(next)
}

pub fn observe<T: Scalar>(state: &FlyerState<T>, goal: &GoalPose<T>) -> Observation<T> {
    let pos_err = goal.position - state.position;
    let rot_err = quat_error_rotvec(&state.orientation, &goal.orientation);
    let (v, w) = (state.lin_vel, state.ang_vel);
    [
        v.x, v.y, v.z, w.x, w.y, w.z, pos_err.x, pos_err.y, pos_err.z, rot_err.x, rot_err.y, rot_err.z,
    ]
}
