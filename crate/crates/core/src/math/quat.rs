use std::ops::{Mul, Neg};

use super::{Scalar, Vec3};

/// Unit quaternion (w, x, y, z), Hamilton convention, rotating body-frame
/// vectors into the world frame.
///
/// Constructors normalize, so `‖q‖ = 1` holds to rounding for every value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuat<T> {
    w: T,
    x: T,
    y: T,
    z: T,
}

impl<T: Scalar> UnitQuat<T> {
    pub fn identity() -> Self {
        Self {
            w: T::one(),
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
        }
    }

    /// Normalizes `(w, x, y, z)`. Returns `None` for a zero or non-finite input.
    pub fn normalize(w: T, x: T, y: T, z: T) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n <= T::zero() {
            return None;
        }
        Some(Self {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Rotation of `angle` radians about `axis`. A zero axis yields the identity.
    pub fn from_axis_angle(axis: Vec3<T>, angle: T) -> Self {
        let n = axis.norm();
        if n <= T::zero() {
            return Self::identity();
        }
        Self::from_rotvec(axis * (angle / n))
    }

    /// Exponential map of a rotation vector (axis times angle).
    pub fn from_rotvec(v: Vec3<T>) -> Self {
        let theta = v.norm();
        let half = theta * T::lit(0.5);
        // sin(θ/2)/θ, with its series near zero
        let k = if theta > T::lit(1e-8) {
            half.sin() / theta
        } else {
            T::lit(0.5) - theta * theta / T::lit(48.0)
        };
        Self::normalize(half.cos(), v.x * k, v.y * k, v.z * k).unwrap_or_else(Self::identity)
    }

    pub fn w(&self) -> T {
        self.w
    }
    pub fn x(&self) -> T {
        self.x
    }
    pub fn y(&self) -> T {
        self.y
    }
    pub fn z(&self) -> T {
        self.z
    }

    pub fn vector(&self) -> Vec3<T> {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Inverse of a unit quaternion is its conjugate.
    pub fn inverse(&self) -> Self {
        self.conjugate()
    }

    /// Representative of the same rotation with `w >= 0`.
    pub fn canonical(&self) -> Self {
        if self.w < T::zero() {
            -*self
        } else {
            *self
        }
    }

    /// Rotates `v` by this quaternion.
    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        let u = self.vector();
        let two = T::lit(2.0);
        let t = u.cross(v) * two;
        v + t * self.w + u.cross(t)
    }

    /// Inverse rotation of `v`.
    pub fn rotate_inv(&self, v: Vec3<T>) -> Vec3<T> {
        self.conjugate().rotate(v)
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn angle(&self) -> T {
        let q = self.canonical();
        T::lit(2.0) * q.vector().norm().atan2(q.w)
    }

    /// Logarithm map on the shortest-path representative: axis times angle, angle in `[0, π]`.
    pub fn to_rotvec(&self) -> Vec3<T> {
        let q = self.canonical();
        let v = q.vector();
        let s = v.norm();
        if s <= T::zero() {
            return Vec3::zero();
        }
        let angle = T::lit(2.0) * s.atan2(q.w);
        let k = if s > T::lit(1e-12) {
            angle / s
        } else {
            T::lit(2.0) / q.w
        };
        v * k
    }

    pub fn cast<U: Scalar>(&self) -> UnitQuat<U> {
        UnitQuat::normalize(
            U::lit(self.w.to_f64_lossy()),
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
        .unwrap_or_else(UnitQuat::identity)
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.vector().is_finite()
    }

    /// Renormalizes in place against accumulated rounding.
    pub fn renormalized(&self) -> Self {
        Self::normalize(self.w, self.x, self.y, self.z).unwrap_or_else(Self::identity)
    }
}

impl<T: Scalar> Mul for UnitQuat<T> {
    type Output = Self;

    /// Hamilton product, not renormalized. Terms are grouped so that
    /// `q * q.inverse()` has an exactly zero vector part.
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self, o);
        Self {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: (a.w * b.x + a.x * b.w) + (a.y * b.z - a.z * b.y),
            y: (a.w * b.y + a.y * b.w) + (a.z * b.x - a.x * b.z),
            z: (a.w * b.z + a.z * b.w) + (a.x * b.y - a.y * b.x),
        }
    }
}

impl<T: Scalar> Neg for UnitQuat<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Rotation vector of `goal ⊗ current⁻¹` on the shortest path (`w >= 0`).
pub fn quat_error_rotvec<T: Scalar>(current: &UnitQuat<T>, goal: &UnitQuat<T>) -> Vec3<T> {
    (*goal * current.inverse()).to_rotvec()
}

/// Total rotation angle between the two orientations, in degrees, in `[0, 180]`.
pub fn quat_angle_deg<T: Scalar>(current: &UnitQuat<T>, goal: &UnitQuat<T>) -> T {
    (*goal * current.inverse()).angle().to_degrees()
}

/// Advances `q` by body-frame angular velocity `omega` over `dt` with the
/// exponential map, `q ⊗ exp(ω·dt)`, and renormalizes.
pub fn integrate_quat<T: Scalar>(q: &UnitQuat<T>, omega: Vec3<T>, dt: T) -> UnitQuat<T> {
    (*q * UnitQuat::from_rotvec(omega * dt)).renormalized()
}
