//! Procedural pose cycles and camera tracks.

use crate::spec::{CameraPath, MotionKind, SceneSpec};
use strata_core::Scalar;
use strata_geom::{Camera, Mat3, PoseParams, Rigid, Vec3};

/// Pose of the character at frame `t` (identity-pose template plus the
/// cycle's joint sinusoids and the scene placement).
pub fn pose_at<T: Scalar>(spec: &SceneSpec, rig: &strata_geom::BodyRig<T>, t: usize) -> PoseParams<T> {
    let mut pose = PoseParams::identity(rig.joint_count());
    let j = |name: &str| rig.joint_index(name).expect("default rig joint");
    let tf = t as f64;

    match spec.character.motion {
        MotionKind::Still => {
            // Slight A-pose so the arms clear the torso.
            pose.rotations[j("l_shoulder")] = Vec3::new(T::zero(), T::zero(), T::cast(-0.3));
            pose.rotations[j("r_shoulder")] = Vec3::new(T::zero(), T::zero(), T::cast(0.3));
        }
        MotionKind::Walk { swing, freq, phase } => {
            let s = (std::f64::consts::TAU * freq * tf + phase).sin();
            let c = (std::f64::consts::TAU * freq * tf + phase).cos();
            pose.rotations[j("l_shoulder")] = Vec3::new(T::cast(swing * s), T::zero(), T::cast(-0.35));
            pose.rotations[j("r_shoulder")] = Vec3::new(T::cast(-swing * s), T::zero(), T::cast(0.35));
            pose.rotations[j("l_elbow")] = Vec3::new(T::cast(0.25 * s.max(0.0)), T::zero(), T::zero());
            pose.rotations[j("r_elbow")] = Vec3::new(T::cast(0.25 * (-s).max(0.0)), T::zero(), T::zero());
            pose.rotations[j("l_hip")] = Vec3::new(T::cast(-swing * s), T::zero(), T::zero());
            pose.rotations[j("r_hip")] = Vec3::new(T::cast(swing * s), T::zero(), T::zero());
            pose.rotations[j("l_knee")] = Vec3::new(T::cast(0.4 * (swing * c).abs()), T::zero(), T::zero());
            pose.rotations[j("r_knee")] = Vec3::new(T::cast(0.4 * (swing * -c).abs()), T::zero(), T::zero());
            pose.rotations[j("spine")] = Vec3::new(T::zero(), T::cast(0.08 * s), T::zero());
        }
        MotionKind::Wave { lift, freq, phase } => {
            let s = (std::f64::consts::TAU * freq * tf + phase).sin();
            pose.rotations[j("l_shoulder")] = Vec3::new(T::zero(), T::zero(), T::cast(-0.35));
            pose.rotations[j("r_shoulder")] = Vec3::new(T::zero(), T::zero(), T::cast(-lift));
            pose.rotations[j("r_elbow")] = Vec3::new(T::zero(), T::zero(), T::cast(-0.5 * s));
            pose.rotations[j("head")] = Vec3::new(T::zero(), T::cast(0.1 * s), T::zero());
        }
    }

    // Gentle vertical bob for non-still motion.
    let bob = match spec.character.motion {
        MotionKind::Still => 0.0,
        MotionKind::Walk { freq, phase, .. } => {
            0.02 * (2.0 * std::f64::consts::TAU * freq * tf + phase).sin()
        }
        MotionKind::Wave { freq, phase, .. } => {
            0.01 * (std::f64::consts::TAU * freq * tf + phase).cos()
        }
    };
    let p = spec.character.position;
    pose.root_translation = Vec3::new(T::cast(p.x), T::cast(p.y + bob), T::cast(p.z));
    pose
}

/// Rotation mapping a y-up world onto y-down image axes while looking down
/// the world +z axis (a half-turn about z).
pub fn upright_view_rotation<T: Scalar>() -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    Mat3 {
        m: [-o, z, z, z, -o, z, z, z, o],
    }
}

/// Camera at frame `t` along the path (translation only; fixed orientation).
pub fn camera_at<T: Scalar>(spec: &SceneSpec, t: usize) -> Camera<T> {
    camera_for(&spec.camera, spec.width, spec.height, t)
}

pub fn camera_for<T: Scalar>(path: &CameraPath, width: usize, height: usize, t: usize) -> Camera<T> {
    let pos = path.position + path.velocity * t as f64;
    let rot: Mat3<T> = upright_view_rotation();
    let trans = -rot.mul_vec(pos.cast());
    Camera::new(
        T::cast(path.focal),
        T::cast(path.focal),
        T::cast(width as f64 / 2.0),
        T::cast(height as f64 / 2.0),
        Rigid::new(rot, trans),
        width,
        height,
    )
    .expect("positive focal and extents")
}
