//! Pose parameters: per-joint axis-angle rotations plus root translation.

use crate::error::{GeomError, Result};
use crate::math::Vec3;
use crate::rig::BodyRig;
use std::io::{BufRead, Write};
use strata_core::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct PoseParams<T> {
    /// Axis-angle per joint (radians; angle is the vector length).
    pub rotations: Vec<Vec3<T>>,
    /// Root translation (metres).
    pub root_translation: Vec3<T>,
}

impl<T: Scalar> PoseParams<T> {
    pub fn identity(joint_count: usize) -> Self {
        Self {
            rotations: vec![Vec3::zero(); joint_count],
            root_translation: Vec3::zero(),
        }
    }

    pub fn joint_count(&self) -> usize {
        self.rotations.len()
    }

    pub fn validate(&self, rig_joints: usize) -> Result<()> {
        if self.rotations.len() != rig_joints {
            return Err(GeomError::JointCountMismatch {
                pose: self.rotations.len(),
                rig: rig_joints,
            });
        }
        for (i, r) in self.rotations.iter().enumerate() {
            if !(r.x.is_finite() && r.y.is_finite() && r.z.is_finite()) {
                return Err(GeomError::NonFinitePose(i));
            }
        }
        let t = self.root_translation;
        if !(t.x.is_finite() && t.y.is_finite() && t.z.is_finite()) {
            return Err(GeomError::NonFinitePose(0));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> PoseParams<U> {
        PoseParams {
            rotations: self.rotations.iter().map(|r| r.cast()).collect(),
            root_translation: self.root_translation.cast(),
        }
    }
}

/// The fixed canonical pose: all rotations zero except the shoulders,
/// abducted 45 degrees (arms brought 45 degrees down from the T-pose
/// template toward the body).
pub fn a_pose<T: Scalar>(rig: &BodyRig<T>) -> Result<PoseParams<T>> {
    let mut pose = PoseParams::identity(rig.joint_count());
    let l = rig
        .joint_index("l_shoulder")
        .ok_or_else(|| GeomError::InvalidRig("rig lacks an `l_shoulder` joint".into()))?;
    let r = rig
        .joint_index("r_shoulder")
        .ok_or_else(|| GeomError::InvalidRig("rig lacks an `r_shoulder` joint".into()))?;
    let quarter = T::cast(std::f64::consts::FRAC_PI_4);
    pose.rotations[l] = Vec3::new(T::zero(), T::zero(), -quarter);
    pose.rotations[r] = Vec3::new(T::zero(), T::zero(), quarter);
    Ok(pose)
}

/// Pose sequence text format:
/// ```text
/// strata-pose v1
/// <n> <j>
/// tx ty tz r0x r0y r0z r1x ...    (3 + 3j fields per frame line)
/// ```
pub fn write_pose_track<T: Scalar, W: Write>(w: &mut W, poses: &[PoseParams<T>]) -> Result<()> {
    let first = poses
        .first()
        .ok_or_else(|| GeomError::Invalid("empty pose track".into()))?;
    writeln!(w, "strata-pose v1")?;
    writeln!(w, "{} {}", poses.len(), first.joint_count())?;
    for p in poses {
        let mut fields = vec![
            p.root_translation.x.to_f64_lossy().to_string(),
            p.root_translation.y.to_f64_lossy().to_string(),
            p.root_translation.z.to_f64_lossy().to_string(),
        ];
        for r in &p.rotations {
            fields.push(r.x.to_f64_lossy().to_string());
            fields.push(r.y.to_f64_lossy().to_string());
            fields.push(r.z.to_f64_lossy().to_string());
        }
        writeln!(w, "{}", fields.join(" "))?;
    }
    Ok(())
}

pub fn read_pose_track<T: Scalar, R: BufRead>(r: &mut R) -> Result<Vec<PoseParams<T>>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| GeomError::Parse("pose: empty file".into()))??;
    if header.trim() != "strata-pose v1" {
        return Err(GeomError::Parse(format!("pose: bad header `{header}`")));
    }
    let meta = lines
        .next()
        .ok_or_else(|| GeomError::Parse("pose: missing meta".into()))??;
    let meta: Vec<usize> = crate::camera::parse_fields(&meta, "pose meta")?;
    let [n, j] = meta[..] else {
        return Err(GeomError::Parse("pose: meta needs `n j`".into()));
    };
    let mut poses = Vec::with_capacity(n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| GeomError::Parse(format!("pose: missing frame {i}")))??;
        let v: Vec<f64> = crate::camera::parse_fields(&line, "pose frame")?;
        if v.len() != 3 + 3 * j {
            return Err(GeomError::Parse(format!(
                "pose: frame {i} has {} fields, expected {}",
                v.len(),
                3 + 3 * j
            )));
        }
        let root_translation = Vec3::new(T::cast(v[0]), T::cast(v[1]), T::cast(v[2]));
        let rotations = (0..j)
            .map(|k| {
                Vec3::new(
                    T::cast(v[3 + 3 * k]),
                    T::cast(v[4 + 3 * k]),
                    T::cast(v[5 + 3 * k]),
                )
            })
            .collect();
        poses.push(PoseParams {
            rotations,
            root_translation,
        });
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::default_rig;

    #[test]
    fn pose_track_roundtrip() {
        let rig: BodyRig<f64> = default_rig();
        let mut p = PoseParams::identity(rig.joint_count());
        p.rotations[4] = Vec3::new(0.1, -0.2, 0.3);
        p.root_translation = Vec3::new(1.0, 0.0, -0.5);
        let track = vec![PoseParams::identity(rig.joint_count()), p];
        let mut buf = Vec::new();
        write_pose_track(&mut buf, &track).unwrap();
        let parsed: Vec<PoseParams<f64>> = read_pose_track(&mut buf.as_slice()).unwrap();
        assert_eq!(parsed, track);
    }

    #[test]
    fn a_pose_touches_only_shoulders() {
        let rig: BodyRig<f64> = default_rig();
        let pose = a_pose(&rig).unwrap();
        for (i, r) in pose.rotations.iter().enumerate() {
            let name = &rig.joint_names[i];
            if name.ends_with("shoulder") {
                assert!(r.norm() > 0.7);
            } else {
                assert_eq!(r.norm(), 0.0);
            }
        }
    }
}
