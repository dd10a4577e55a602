//! Pose and rotation primitives.
//!
//! Conventions used throughout the crate:
//!
//! * Quaternions are Hamilton, scalar-first, and composition matches matrix
//!   multiplication: `R(a ⊗ b) = R(a) · R(b)`.
//! * Every [`UnitQuaternion`] is stored normalized with a canonical sign
//!   (`w ≥ 0`, ties broken by the first non-zero vector component being
//!   positive), so `q` and `-q` construct the same value.
//! * A [`Pose`] holds the camera centre in world coordinates and the
//!   world-to-camera rotation (`v_cam = R(q) · (v_world - position)`), the
//!   convention used by SfM reconstructions.
//! * Angles crossing the public API are in degrees unless a name says `rad`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Unit quaternion `(w, x, y, z)`; see the module docs for conventions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes and sign-canonicalizes `(w, x, y, z)`.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::DegenerateQuaternion { norm });
        }
        Ok(Self::canonical(w / norm, x / norm, y / norm, z / norm))
    }

    // Callers guarantee the input is (close to) unit norm.
    fn new_normalized(w: f64, x: f64, y: f64, z: f64) -> Self {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        Self::canonical(w / norm, x / norm, y / norm, z / norm)
    }

    fn canonical(w: f64, x: f64, y: f64, z: f64) -> Self {
        let flip = if w != 0.0 {
            w < 0.0
        } else {
            [x, y, z]
                .into_iter()
                .find(|c| *c != 0.0)
                .is_some_and(|c| c < 0.0)
        };
        if flip {
            Self {
                w: -w,
                x: -x,
                y: -y,
                z: -z,
            }
        } else {
            Self { w, x, y, z }
        }
    }

    /// Rotation of `angle_rad` about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Result<Self> {
        let n = axis.norm();
        if n.is_nan() || n <= 1e-12 || !angle_rad.is_finite() {
            return Err(Error::NonFinite("axis-angle rotation"));
        }
        let (s, c) = (angle_rad / 2.0).sin_cos();
        let a = axis * (s / n);
        Ok(Self::new_normalized(c, a.x, a.y, a.z))
    }

    /// Exponential map: rotation about `v` by `|v|` radians.
    pub fn from_rotation_vector(v: Vec3) -> Self {
        let angle = v.norm();
        if angle < 1e-300 {
            return Self::IDENTITY;
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let a = v * (s / angle);
        Self::new_normalized(c, a.x, a.y, a.z)
    }

    pub fn from_rotation_matrix(m: &RotationMatrix) -> Self {
        // Shepperd: branch on the largest diagonal combination.
        let r = &m.0;
        let trace = r[0][0] + r[1][1] + r[2][2];
        let (w, x, y, z) = if trace > r[0][0].max(r[1][1]).max(r[2][2]) {
            let s = (1.0 + trace).sqrt() * 2.0;
            (
                0.25 * s,
                (r[2][1] - r[1][2]) / s,
                (r[0][2] - r[2][0]) / s,
                (r[1][0] - r[0][1]) / s,
            )
        } else if r[0][0] >= r[1][1] && r[0][0] >= r[2][2] {
            let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
            (
                (r[2][1] - r[1][2]) / s,
                0.25 * s,
                (r[0][1] + r[1][0]) / s,
                (r[0][2] + r[2][0]) / s,
            )
        } else if r[1][1] >= r[2][2] {
            let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
            (
                (r[0][2] - r[2][0]) / s,
                (r[0][1] + r[1][0]) / s,
                0.25 * s,
                (r[1][2] + r[2][1]) / s,
            )
        } else {
            let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
            (
                (r[1][0] - r[0][1]) / s,
                (r[0][2] + r[2][0]) / s,
                (r[1][2] + r[2][1]) / s,
                0.25 * s,
            )
        };
        Self::new_normalized(w, x, y, z)
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn dot(&self, other: &UnitQuaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Hamilton product `self ⊗ rhs`.
    pub fn compose(&self, rhs: &UnitQuaternion) -> UnitQuaternion {
        let (a, b) = (self, rhs);
        Self::new_normalized(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    pub fn inverse(&self) -> UnitQuaternion {
        Self::canonical(self.w, -self.x, -self.y, -self.z)
    }

    /// Rotation angle of `self⁻¹ ⊗ other`, in `[0, π]`.
    ///
    /// Evaluated as `2·atan2(|vec|, |w|)`, which equals `2·acos(|w|)` for a
    /// unit quaternion but keeps full precision near zero and cannot
    /// produce NaN.
    pub fn angle_to_rad(&self, other: &UnitQuaternion) -> f64 {
        let rel = self.inverse().compose(other);
        2.0 * rel.vector().norm().atan2(rel.w.abs())
    }

    pub fn angle_to_deg(&self, other: &UnitQuaternion) -> f64 {
        self.angle_to_rad(other).to_degrees()
    }

    /// Rotation angle of this quaternion alone, degrees.
    pub fn angle_deg(&self) -> f64 {
        UnitQuaternion::IDENTITY.angle_to_deg(self)
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        // v' = v + 2w(u×v) + 2u×(u×v)
        let u = self.vector();
        let t = u.cross(&v) * 2.0;
        v + t * self.w + u.cross(&t)
    }

    pub fn to_rotation_matrix(&self) -> RotationMatrix {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        RotationMatrix([
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ])
    }
}

impl<'de> Deserialize<'de> for UnitQuaternion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            w: f64,
            x: f64,
            y: f64,
            z: f64,
        }
        let r = Raw::deserialize(d)?;
        UnitQuaternion::new(r.w, r.x, r.y, r.z).map_err(serde::de::Error::custom)
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Proper rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(pub(crate) [[f64; 3]; 3]);

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix =
        RotationMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.0
    }

    pub fn transform(&self, v: Vec3) -> Vec3 {
        let r = &self.0;
        Vec3::new(
            r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
            r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
            r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> RotationMatrix {
        let r = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = r[j][i];
            }
        }
        RotationMatrix(t)
    }

    pub fn mul(&self, rhs: &RotationMatrix) -> RotationMatrix {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        RotationMatrix(out)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn determinant(&self) -> f64 {
        let r = &self.0;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion,
}

impl Pose {
    pub fn new(position: Vec3, orientation: UnitQuaternion) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }
}

/// Scalar relative motion between two poses: travelled distance (m) and
/// rotation angle (degrees, `[0, 180]`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Odometry {
    pub dist: f64,
    pub angle: f64,
}

/// World-frame rigid motion `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::IDENTITY,
            translation: Vec3::ZERO,
        }
    }

    pub fn rotation_matrix(&self) -> RotationMatrix {
        self.rotation.to_rotation_matrix()
    }

    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        self.rotation_matrix().transform(p) + self.translation
    }

    /// Re-expresses a pose in the transformed frame. Because orientations are
    /// world-to-camera, the frame rotation enters on the right as its
    /// inverse.
    pub fn apply_pose(&self, pose: &Pose) -> Pose {
        Pose {
            position: self.apply_point(pose.position),
            orientation: pose.orientation.compose(&self.rotation.inverse()),
        }
    }
}

pub fn compose(a: &UnitQuaternion, b: &UnitQuaternion) -> UnitQuaternion {
    a.compose(b)
}

pub fn inverse(q: &UnitQuaternion) -> UnitQuaternion {
    q.inverse()
}

pub fn rotation_angle_deg(a: &UnitQuaternion, b: &UnitQuaternion) -> f64 {
    a.angle_to_deg(b)
}

pub fn translation_distance(a: &Vec3, b: &Vec3) -> f64 {
    (*a - *b).norm()
}

pub fn odometry(a: &Pose, b: &Pose) -> Odometry {
    Odometry {
        dist: translation_distance(&a.position, &b.position),
        angle: rotation_angle_deg(&a.orientation, &b.orientation),
    }
}

pub fn to_rotation_matrix(q: &UnitQuaternion) -> RotationMatrix {
    q.to_rotation_matrix()
}
