use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Serialize};

/// A rigid pose: position in meters plus a unit quaternion.
///
/// The quaternion is kept in the `w >= 0` hemisphere so that equal rotations
/// compare equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation: canonical(orientation),
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    /// Builds a pose from raw `(w, x, y, z)` components, normalizing the quaternion.
    pub fn from_parts(position: [f64; 3], wxyz: [f64; 4]) -> Self {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        Self::new(Vector3::from(position), UnitQuaternion::from_quaternion(q))
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self::new(iso.translation.vector, iso.rotation)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    /// Quaternion as `[w, x, y, z]`.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Composition `self * other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.position + self.orientation * other.position,
            self.orientation * other.orientation,
        )
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

pub(crate) fn canonical(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    // Renormalize so repeated products don't drift off the unit sphere.
    let raw = q.into_inner();
    let raw = if raw.w < 0.0 { -raw } else { raw };
    UnitQuaternion::new_normalize(raw)
}

/// Rotation vector (axis * angle) of `q`, with the angle in `[0, pi]`.
pub fn log_map(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let q = q.quaternion();
    let (w, v) = if q.w < 0.0 {
        (-q.w, -q.imag())
    } else {
        (q.w, q.imag())
    };
    let s = v.norm();
    if s < 1e-12 {
        // first-order expansion of 2*atan2(s, w) * v / s
        return v * (2.0 / w.max(1e-300));
    }
    let angle = 2.0 * s.atan2(w);
    v * (angle / s)
}

/// Inverse of [`log_map`].
pub fn exp_map(r: &Vector3<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_scaled_axis(*r)
}

/// Per-axis admissible deviation of the tool frame from its target, in the
/// target's tool frame. Axis order is `(tx, ty, tz, rx, ry, rz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    pub lower: [f64; 6],
    pub upper: [f64; 6],
}

impl ToleranceSpec {
    /// Every axis must match exactly.
    pub fn exact() -> Self {
        Self {
            lower: [0.0; 6],
            upper: [0.0; 6],
        }
    }

    /// Exact except for free rotation about the tool z axis.
    pub fn free_rz() -> Self {
        let mut tol = Self::exact();
        tol.lower[5] = f64::NEG_INFINITY;
        tol.upper[5] = f64::INFINITY;
        tol
    }

    pub fn is_free(&self, axis: usize) -> bool {
        self.lower[axis] == f64::NEG_INFINITY && self.upper[axis] == f64::INFINITY
    }

    pub fn is_valid(&self) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .all(|(&lo, &hi)| !lo.is_nan() && !hi.is_nan() && lo <= 0.0 && 0.0 <= hi)
    }

    fn project(&self, raw: &Vector6<f64>) -> Vector6<f64> {
        Vector6::from_fn(|i, _| {
            let c = raw[i];
            if c > self.upper[i] {
                c - self.upper[i]
            } else if c < self.lower[i] {
                c - self.lower[i]
            } else {
                0.0
            }
        })
    }
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self::exact()
    }
}

/// Raw deviation of `current` from `target`, expressed in the target tool frame:
/// translation followed by the rotation vector of `target^-1 * current`.
pub fn raw_pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    if current == target {
        return Vector6::zeros();
    }
    let inv = target.orientation.inverse();
    let dp = inv * (current.position - target.position);
    let dr = log_map(&(inv * current.orientation));
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

/// Tolerance-projected pose residual. Components inside `[lower, upper]`
/// become zero; components outside report their signed overshoot past the
/// nearer bound.
pub fn pose_error(current: &Pose, target: &Pose, tol: &ToleranceSpec) -> Vector6<f64> {
    tol.project(&raw_pose_error(current, target))
}
