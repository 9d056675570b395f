//! Minimal 2D/3D math over the shared scalar trait.

use std::ops::{Add, Mul, Neg, Sub};
use strata_core::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    /// z component of the 2D cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn splat(v: T) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n == T::zero() {
            return self;
        }
        self * (T::one() / n)
    }

    /// Component-wise product.
    pub fn hadamard(self, o: Self) -> Self {
        Self::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn min(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn cast<U: Scalar>(self) -> Vec3<U> {
        Vec3::new(
            U::cast(self.x.to_f64_lossy()),
            U::cast(self.y.to_f64_lossy()),
            U::cast(self.z.to_f64_lossy()),
        )
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T> {
    pub m: [T; 9],
}

impl<T: Scalar> Mat3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [o, z, z, z, o, z, z, z, o],
        }
    }

    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>, r2: Vec3<T>) -> Self {
        Self {
            m: [r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z],
        }
    }

    /// Rodrigues rotation from an axis-angle vector (angle = length, radians).
    /// A zero axis-angle yields the exact identity.
    pub fn from_axis_angle(aa: Vec3<T>) -> Self {
        let theta = aa.norm();
        if theta < T::cast(1e-12) {
            return Self::identity();
        }
        let k = aa * (T::one() / theta);
        let (s, c) = (theta.sin(), theta.cos());
        let v = T::one() - c;
        let (x, y, z) = (k.x, k.y, k.z);
        Self {
            m: [
                c + x * x * v,
                x * y * v - z * s,
                x * z * v + y * s,
                y * x * v + z * s,
                c + y * y * v,
                y * z * v - x * s,
                z * x * v - y * s,
                z * y * v + x * s,
                c + z * z * v,
            ],
        }
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(
            self.m[0] * v.x + self.m[1] * v.y + self.m[2] * v.z,
            self.m[3] * v.x + self.m[4] * v.y + self.m[5] * v.z,
            self.m[6] * v.x + self.m[7] * v.y + self.m[8] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut m = [T::zero(); 9];
        for r in 0..3 {
            for c in 0..3 {
                m[r * 3 + c] = self.m[r * 3] * o.m[c]
                    + self.m[r * 3 + 1] * o.m[3 + c]
                    + self.m[r * 3 + 2] * o.m[6 + c];
            }
        }
        Self { m }
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]],
        }
    }

    /// Log map of a rotation matrix: the axis-angle vector whose
    /// [`Self::from_axis_angle`] reproduces it.
    pub fn to_axis_angle(&self) -> Vec3<T> {
        let m = &self.m;
        let tr = m[0] + m[4] + m[8];
        let c = ((tr - T::one()) * T::cast(0.5)).max(-T::one()).min(T::one());
        let theta = c.acos();
        let skew = Vec3::new(m[7] - m[5], m[2] - m[6], m[3] - m[1]);
        if theta < T::cast(1e-7) {
            return skew * T::cast(0.5);
        }
        if theta > T::cast(std::f64::consts::PI - 1e-4) {
            // Near pi the skew part vanishes; recover the axis from the
            // symmetric part and take signs from the skew vector.
            let one = T::one();
            let ax = ((m[0] - c) / (one - c)).max(T::zero()).sqrt();
            let ay = ((m[4] - c) / (one - c)).max(T::zero()).sqrt();
            let az = ((m[8] - c) / (one - c)).max(T::zero()).sqrt();
            let sx = if skew.x < T::zero() { -one } else { one };
            let sy = if skew.y < T::zero() { -one } else { one };
            let sz = if skew.z < T::zero() { -one } else { one };
            let axis = Vec3::new(ax * sx, ay * sy, az * sz).normalized();
            return axis * theta;
        }
        skew * (theta / (T::cast(2.0) * theta.sin()))
    }

    pub fn cast<U: Scalar>(&self) -> Mat3<U> {
        let mut m = [U::zero(); 9];
        for (o, &v) in m.iter_mut().zip(&self.m) {
            *o = U::cast(v.to_f64_lossy());
        }
        Mat3 { m }
    }
}

/// Rigid transform `p -> rot * p + trans`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rigid<T> {
    pub rot: Mat3<T>,
    pub trans: Vec3<T>,
}

impl<T: Scalar> Rigid<T> {
    pub fn identity() -> Self {
        Self {
            rot: Mat3::identity(),
            trans: Vec3::zero(),
        }
    }

    pub fn new(rot: Mat3<T>, trans: Vec3<T>) -> Self {
        Self { rot, trans }
    }

    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        self.rot.mul_vec(p) + self.trans
    }

    /// Composition applying `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rot: self.rot.mul_mat(&other.rot),
            trans: self.rot.mul_vec(other.trans) + self.trans,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rot.transpose();
        Self {
            rot: rt,
            trans: -rt.mul_vec(self.trans),
        }
    }
}
