//! Forward kinematics and linear-blend skinning.
//!
//! World transforms are carried as `(rotation, rest position, drift)` so the
//! identity pose is exact: skinning adds a weighted displacement to the
//! template vertex, and the displacement is exactly zero when every rotation
//! is the identity and the root translation is zero.

use crate::error::{GeomError, Result};
use crate::math::{Mat3, Rigid, Vec3};
use crate::pose::PoseParams;
use crate::rig::BodyRig;
use strata_core::Scalar;

/// World transform of one joint, `p -> rot * (p - rest) + rest + delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointTransform<T> {
    pub rot: Mat3<T>,
    /// Scaled rest-pose joint position (the rotation pivot).
    pub rest: Vec3<T>,
    /// Drift of the joint away from its rest position.
    pub delta: Vec3<T>,
}

impl<T: Scalar> JointTransform<T> {
    pub fn world_position(&self) -> Vec3<T> {
        self.rest + self.delta
    }

    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rot.mul_vec(p - self.rest) + self.rest + self.delta
    }

    /// Displacement form used by skinning; exactly zero under the identity.
    pub fn displacement(&self, p: Vec3<T>) -> Vec3<T> {
        let local = p - self.rest;
        (self.rot.mul_vec(local) - local) + self.delta
    }

    pub fn as_rigid(&self) -> Rigid<T> {
        // rot * (p - rest) + rest + delta == rot * p + (rest + delta - rot*rest)
        Rigid::new(self.rot, self.rest + self.delta - self.rot.mul_vec(self.rest))
    }
}

/// Hierarchical forward kinematics: the child world rotation composes the
/// parent's, and the child pivot drifts by `parent_rot * offset - offset`.
pub fn forward_kinematics<T: Scalar>(
    rig: &BodyRig<T>,
    pose: &PoseParams<T>,
) -> Result<Vec<JointTransform<T>>> {
    pose.validate(rig.joint_count())?;
    let mut out: Vec<JointTransform<T>> = Vec::with_capacity(rig.joint_count());
    for j in 0..rig.joint_count() {
        let local_rot = Mat3::from_axis_angle(pose.rotations[j]);
        let rest = rig.scaled_joint(j);
        match rig.parents[j] {
            None => out.push(JointTransform {
                rot: local_rot,
                rest,
                delta: pose.root_translation,
            }),
            Some(p) => {
                let parent = &out[p];
                let offset = rest - parent.rest;
                let delta = (parent.rot.mul_vec(offset) - offset) + parent.delta;
                out.push(JointTransform {
                    rot: parent.rot.mul_mat(&local_rot),
                    rest,
                    delta,
                });
            }
        }
    }
    Ok(out)
}

/// Linear-blend skinning: each posed vertex is the template vertex plus the
/// convex combination of its joints' displacements.
pub fn skin<T: Scalar>(rig: &BodyRig<T>, transforms: &[JointTransform<T>]) -> Result<Vec<Vec3<T>>> {
    if transforms.len() != rig.joint_count() {
        return Err(GeomError::JointCountMismatch {
            pose: transforms.len(),
            rig: rig.joint_count(),
        });
    }
    let j = rig.joint_count();
    let mut out = Vec::with_capacity(rig.vertex_count());
    for vi in 0..rig.vertex_count() {
        let v = rig.scaled_vertex(vi);
        let row = &rig.weights[vi * j..(vi + 1) * j];
        let mut disp = Vec3::zero();
        for (ji, &w) in row.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            disp = disp + transforms[ji].displacement(v) * w;
        }
        out.push(v + disp);
    }
    Ok(out)
}

/// Convenience: FK followed by skinning.
pub fn pose_vertices<T: Scalar>(rig: &BodyRig<T>, pose: &PoseParams<T>) -> Result<Vec<Vec3<T>>> {
    let transforms = forward_kinematics(rig, pose)?;
    skin(rig, &transforms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::default_rig;
    use std::f64::consts::FRAC_PI_2;

    fn one_link_chain() -> BodyRig<f64> {
        BodyRig {
            template: vec![Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.5, 0.0), Vec3::new(0.0, 1.5, 0.0)],
            faces: vec![[0, 1, 2]],
            joints: vec![Vec3::zero(), Vec3::new(0.0, 1.0, 0.0)],
            parents: vec![None, Some(0)],
            joint_names: vec!["root".into(), "child".into()],
            weights: vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            shape_scale: Vec3::new(1.0, 1.0, 1.0),
        }
    }

    #[test]
    fn identity_pose_gives_identity_transforms_and_exact_template() {
        let rig: BodyRig<f64> = default_rig();
        let pose = PoseParams::identity(rig.joint_count());
        let tf = forward_kinematics(&rig, &pose).unwrap();
        for t in &tf {
            assert_eq!(t.rot, Mat3::identity());
            assert_eq!(t.delta, Vec3::zero());
        }
        let posed = skin(&rig, &tf).unwrap();
        for (p, i) in posed.iter().zip(0..) {
            assert_eq!(*p, rig.scaled_vertex(i), "vertex {i} moved under identity pose");
        }
    }

    #[test]
    fn root_translation_translates_every_joint_exactly() {
        let rig: BodyRig<f64> = default_rig();
        let mut pose = PoseParams::identity(rig.joint_count());
        pose.root_translation = Vec3::new(1.0, 0.0, 0.0);
        let tf = forward_kinematics(&rig, &pose).unwrap();
        for (j, t) in tf.iter().enumerate() {
            assert_eq!(t.world_position(), rig.scaled_joint(j) + Vec3::new(1.0, 0.0, 0.0));
            assert_eq!(t.rot, Mat3::identity());
        }
    }

    #[test]
    fn rotated_root_carries_child_joint() {
        // Child at (0,1,0), root rotated 90 degrees about z: the child's
        // world position lands at (-1,0,0).
        let rig = one_link_chain();
        let mut pose = PoseParams::identity(2);
        pose.rotations[0] = Vec3::new(0.0, 0.0, FRAC_PI_2);
        let tf = forward_kinematics(&rig, &pose).unwrap();
        let p = tf[1].world_position();
        assert!((p - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12, "{p:?}");
    }

    #[test]
    fn single_joint_rotation_spins_vertex_about_origin() {
        let rig = BodyRig {
            template: vec![Vec3::new(1.0, 0.0, 0.0)],
            faces: vec![],
            joints: vec![Vec3::zero()],
            parents: vec![None],
            joint_names: vec!["root".into()],
            weights: vec![1.0],
            shape_scale: Vec3::new(1.0, 1.0, 1.0),
        };
        let mut pose = PoseParams::identity(1);
        pose.rotations[0] = Vec3::new(0.0, 0.0, FRAC_PI_2);
        let posed = pose_vertices(&rig, &pose).unwrap();
        assert!((posed[0] - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn half_weights_between_identity_and_flip_collapse_vertex() {
        // Classic blend collapse: averaging the identity image (1,0,0) and
        // the 180-degree image (-1,0,0) yields the origin.
        let rig = BodyRig {
            template: vec![Vec3::new(1.0, 0.0, 0.0)],
            faces: vec![],
            joints: vec![Vec3::zero(), Vec3::zero()],
            parents: vec![None, Some(0)],
            joint_names: vec!["root".into(), "twin".into()],
            weights: vec![0.5, 0.5],
            shape_scale: Vec3::new(1.0, 1.0, 1.0),
        };
        let mut pose = PoseParams::identity(2);
        pose.rotations[1] = Vec3::new(0.0, 0.0, std::f64::consts::PI);
        let posed = pose_vertices(&rig, &pose).unwrap();
        assert!(posed[0].norm() < 1e-12, "{:?}", posed[0]);
    }

    #[test]
    fn joint_count_mismatch_is_an_error() {
        let rig: BodyRig<f64> = default_rig();
        let pose = PoseParams::identity(3);
        assert!(matches!(
            forward_kinematics(&rig, &pose),
            Err(GeomError::JointCountMismatch { .. })
        ));
    }
}
