use std::ops::Deref;

use nalgebra::{Isometry3, Matrix6xX, Translation3, UnitQuaternion, Vector3};

use super::pose::{Pose, ToleranceSpec};
use super::KinematicsError;

/// Joint angles in radians, one per degree of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig(Vec<f64>);

impl JointConfig {
    pub fn new(angles: Vec<f64>) -> Self {
        Self(angles)
    }

    pub fn zeros(dof: usize) -> Self {
        Self(vec![0.0; dof])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean joint-space distance.
    pub fn distance(&self, other: &JointConfig) -> f64 {
        euclidean(&self.0, &other.0)
    }

    /// Largest per-joint absolute difference.
    pub fn max_abs_diff(&self, other: &JointConfig) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

impl Deref for JointConfig {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for JointConfig {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

/// One revolute joint in modified Denavit-Hartenberg form.
///
/// `a` and `alpha` describe the link leading into this joint; `d` and
/// `theta_offset` the displacement along and rotation about its own axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhJoint {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
    pub pos_lower: f64,
    pub pos_upper: f64,
    pub vel_max: f64,
}

impl DhJoint {
    /// A joint with symmetric position limits `±limit` and the given velocity bound.
    pub fn new(a: f64, alpha: f64, d: f64, limit: f64, vel_max: f64) -> Self {
        Self {
            a,
            alpha,
            d,
            theta_offset: 0.0,
            pos_lower: -limit,
            pos_upper: limit,
            vel_max,
        }
    }
}

/// Serial revolute chain with joint limits, a tool transform, and a
/// tolerance specification for the tool frame.
#[derive(Debug, Clone)]
pub struct KinematicChain {
    name: String,
    joints: Vec<DhJoint>,
    // RotX(alpha) * TransX(a), cached per joint
    link_fixed: Vec<Isometry3<f64>>,
    tool: Pose,
    tool_iso: Isometry3<f64>,
    tolerance: ToleranceSpec,
}

impl KinematicChain {
    pub fn new(
        name: impl Into<String>,
        joints: Vec<DhJoint>,
        tool: Pose,
        tolerance: ToleranceSpec,
    ) -> Result<Self, KinematicsError> {
        if joints.is_empty() {
            return Err(KinematicsError::InvalidChain(
                "chain needs at least one joint".into(),
            ));
        }
        for (i, j) in joints.iter().enumerate() {
            let values = [j.a, j.alpha, j.d, j.theta_offset, j.vel_max];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(KinematicsError::InvalidChain(format!(
                    "joint {i}: non-finite parameter"
                )));
            }
            if j.vel_max.is_nan() || j.vel_max <= 0.0 {
                return Err(KinematicsError::InvalidChain(format!(
                    "joint {i}: velocity limit must be positive, got {}",
                    j.vel_max
                )));
            }
            if !(j.pos_lower < j.pos_upper && j.pos_lower.is_finite() && j.pos_upper.is_finite()) {
                return Err(KinematicsError::InvalidChain(format!(
                    "joint {i}: position limits must satisfy lower < upper, got [{}, {}]",
                    j.pos_lower, j.pos_upper
                )));
            }
        }
        if !tolerance.is_valid() {
            return Err(KinematicsError::InvalidChain(
                "tolerance bounds must satisfy lower <= 0 <= upper".into(),
            ));
        }
        let link_fixed = joints
            .iter()
            .map(|j| {
                Isometry3::from_parts(
                    Translation3::identity(),
                    UnitQuaternion::from_axis_angle(&Vector3::x_axis(), j.alpha),
                ) * Isometry3::translation(j.a, 0.0, 0.0)
            })
            .collect();
        Ok(Self {
            name: name.into(),
            link_fixed,
            tool_iso: tool.to_isometry(),
            tool,
            joints,
            tolerance,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[DhJoint] {
        &self.joints
    }

    pub fn tool_transform(&self) -> &Pose {
        &self.tool
    }

    pub fn tolerance(&self) -> &ToleranceSpec {
        &self.tolerance
    }

    /// Same chain with a different tolerance specification.
    pub fn with_tolerance(&self, tolerance: ToleranceSpec) -> Result<Self, KinematicsError> {
        Self::new(self.name.clone(), self.joints.clone(), self.tool, tolerance)
    }

    pub fn lower_limits(&self) -> impl Iterator<Item = f64> + '_ {
        self.joints.iter().map(|j| j.pos_lower)
    }

    pub fn upper_limits(&self) -> impl Iterator<Item = f64> + '_ {
        self.joints.iter().map(|j| j.pos_upper)
    }

    /// Joint configuration halfway between the position limits.
    pub fn mid_config(&self) -> JointConfig {
        JointConfig(
            self.joints
                .iter()
                .map(|j| 0.5 * (j.pos_lower + j.pos_upper))
                .collect(),
        )
    }

    /// Clamps every angle into the position limits.
    pub fn clamp_to_limits(&self, q: &mut [f64]) {
        for (v, j) in q.iter_mut().zip(&self.joints) {
            *v = v.clamp(j.pos_lower, j.pos_upper);
        }
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof()
            && q.iter()
                .zip(&self.joints)
                .all(|(v, j)| *v >= j.pos_lower && *v <= j.pos_upper)
    }

    fn check_dim(&self, q: &[f64]) -> Result<(), KinematicsError> {
        if q.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        Ok(())
    }

    /// Tool-frame pose for joint angles `q`.
    pub fn forward_kinematics(&self, q: &[f64]) -> Result<Pose, KinematicsError> {
        self.check_dim(q)?;
        Ok(Pose::from_isometry(&self.fk_unchecked(q)))
    }

    pub(crate) fn fk_unchecked(&self, q: &[f64]) -> Isometry3<f64> {
        let mut frame = Isometry3::identity();
        for ((joint, fixed), &angle) in self.joints.iter().zip(&self.link_fixed).zip(q) {
            frame = frame * fixed * joint_motion(joint, angle);
        }
        frame * self.tool_iso
    }

    /// Geometric Jacobian (6 x dof) in the base frame, linear rows first.
    pub fn jacobian(&self, q: &[f64]) -> Result<Matrix6xX<f64>, KinematicsError> {
        self.check_dim(q)?;
        let mut jac = Matrix6xX::zeros(self.dof());
        self.pose_and_jacobian_into(q, &mut jac);
        Ok(jac)
    }

    /// Forward kinematics and Jacobian in one pass. `jac` must be 6 x dof.
    pub(crate) fn pose_and_jacobian_into(
        &self,
        q: &[f64],
        jac: &mut Matrix6xX<f64>,
    ) -> Isometry3<f64> {
        let n = self.dof();
        let mut axes = [Vector3::zeros(); 16];
        let mut origins = [Vector3::zeros(); 16];
        let mut heap_axes;
        let mut heap_origins;
        let (axes, origins): (&mut [Vector3<f64>], &mut [Vector3<f64>]) = if n <= 16 {
            (&mut axes[..n], &mut origins[..n])
        } else {
            heap_axes = vec![Vector3::zeros(); n];
            heap_origins = vec![Vector3::zeros(); n];
            (&mut heap_axes[..], &mut heap_origins[..])
        };

        let mut frame = Isometry3::identity();
        for (i, ((joint, fixed), &angle)) in
            self.joints.iter().zip(&self.link_fixed).zip(q).enumerate()
        {
            frame *= fixed;
            // rotation about and translation along z keep the axis and the
            // lever-arm cross product unchanged, so this frame suffices
            axes[i] = frame.rotation * Vector3::z();
            origins[i] = frame.translation.vector;
            frame *= joint_motion(joint, angle);
        }
        let tool = frame * self.tool_iso;
        let p = tool.translation.vector;
        for i in 0..n {
            let lin = axes[i].cross(&(p - origins[i]));
            let mut col = jac.column_mut(i);
            col[0] = lin.x;
            col[1] = lin.y;
            col[2] = lin.z;
            col[3] = axes[i].x;
            col[4] = axes[i].y;
            col[5] = axes[i].z;
        }
        tool
    }
}

fn joint_motion(joint: &DhJoint, angle: f64) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::new(0.0, 0.0, joint.d),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle + joint.theta_offset),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    pub(crate) fn planar_3r() -> KinematicChain {
        let j = |a| DhJoint::new(a, 0.0, 0.0, PI, 1.0);
        // modified DH: a_{i-1} precedes joint i, so the last link is the tool
        KinematicChain::new(
            "planar3r",
            vec![j(0.0), j(1.0), j(1.0)],
            Pose::from_translation(1.0, 0.0, 0.0),
            ToleranceSpec::exact(),
        )
        .unwrap()
    }

    #[test]
    fn straight_arm() {
        let chain = planar_3r();
        let p = chain.forward_kinematics(&[0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(p.position, Vector3::new(3.0, 0.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(p.orientation.angle(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotated_straight_arm() {
        let chain = planar_3r();
        let p = chain.forward_kinematics(&[PI / 2.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(p.position, Vector3::new(0.0, 3.0, 0.0), epsilon = 1e-12);
        let expect = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), PI / 2.0);
        assert_abs_diff_eq!(p.orientation.angle_to(&expect), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn planar_jacobian_first_column() {
        let chain = planar_3r();
        let jac = chain.jacobian(&[0.0, 0.0, 0.0]).unwrap();
        let col: Vec<f64> = jac.column(0).iter().copied().collect();
        let expect = [0.0, 3.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in col.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let chain = planar_3r();
        assert!(matches!(
            chain.forward_kinematics(&[0.0, 0.0]),
            Err(KinematicsError::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
        assert!(chain.jacobian(&[0.0; 4]).is_err());
    }

    #[test]
    fn invalid_chains_are_rejected() {
        let mut j = DhJoint::new(0.0, 0.0, 0.0, 1.0, 1.0);
        j.vel_max = 0.0;
        let r = KinematicChain::new("x", vec![j], Pose::identity(), ToleranceSpec::exact());
        assert!(r.is_err());
        let mut j = DhJoint::new(0.0, 0.0, 0.0, 1.0, 1.0);
        j.pos_lower = 1.0;
        let r = KinematicChain::new("x", vec![j], Pose::identity(), ToleranceSpec::exact());
        assert!(r.is_err());
        let r = KinematicChain::new("x", vec![], Pose::identity(), ToleranceSpec::exact());
        assert!(r.is_err());
    }

    #[test]
    fn joint_distance_helpers() {
        let a = JointConfig::new(vec![0.0, 0.0]);
        let b = JointConfig::new(vec![3.0, -4.0]);
        assert_eq!(a.distance(&b), 5.0);
        assert_eq!(a.max_abs_diff(&b), 4.0);
    }
}
