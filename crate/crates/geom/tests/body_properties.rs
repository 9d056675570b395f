//! Property tests for kinematics, skinning, and projection.

use proptest::prelude::*;
use strata_geom::math::{Mat3, Rigid, Vec3};
use strata_geom::pose::PoseParams;
use strata_geom::rig::default_rig;
use strata_geom::{forward_kinematics, pose_vertices, skin, Camera};

fn arb_axis_angle() -> impl Strategy<Value = Vec3<f64>> {
    (-1.2f64..1.2, -1.2f64..1.2, -1.2f64..1.2).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn arb_pose(joints: usize) -> impl Strategy<Value = PoseParams<f64>> {
    (
        proptest::collection::vec(arb_axis_angle(), joints),
        arb_axis_angle(),
    )
        .prop_map(|(rotations, t)| PoseParams {
            rotations,
            root_translation: t,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A global rigid transform folded into the root pose moves every
    /// skinned vertex by exactly that transform (to 1e-5).
    #[test]
    fn rigid_invariance(pose in arb_pose(16), g_aa in arb_axis_angle(), g_t in arb_axis_angle()) {
        let rig = default_rig::<f64>();
        let g = Rigid::new(Mat3::from_axis_angle(g_aa), g_t);

        let base = pose_vertices(&rig, &pose).unwrap();

        // Fold g into the root: R0' = g.R * R0 and the translation keeps the
        // root pivot consistent.
        let j0 = rig.scaled_joint(0);
        let r0 = Mat3::from_axis_angle(pose.rotations[0]);
        let mut moved_pose = pose.clone();
        moved_pose.rotations[0] = g.rot.mul_mat(&r0).to_axis_angle();
        moved_pose.root_translation = g.apply(j0 + pose.root_translation) - j0;

        let moved = pose_vertices(&rig, &moved_pose).unwrap();
        for (m, b) in moved.iter().zip(&base) {
            let expect = g.apply(*b);
            prop_assert!((*m - expect).norm() < 1e-5, "{m:?} vs {expect:?}");
        }
    }

    /// Every skinned vertex is the stated convex combination of its
    /// per-joint rigid images: it lies in their convex hull.
    #[test]
    fn skinned_vertex_in_convex_hull(pose in arb_pose(16)) {
        let rig = default_rig::<f64>();
        let tf = forward_kinematics(&rig, &pose).unwrap();
        let posed = skin(&rig, &tf).unwrap();
        let j = rig.joint_count();
        for vi in (0..rig.vertex_count()).step_by(17) {
            let v = rig.scaled_vertex(vi);
            let mut combo = Vec3::zero();
            let mut wsum = 0.0f64;
            for ji in 0..j {
                let w = rig.weight(vi, ji);
                prop_assert!((0.0..=1.0 + 1e-9).contains(&w));
                if w > 0.0 {
                    combo = combo + tf[ji].transform_point(v) * w;
                    wsum += w;
                }
            }
            prop_assert!((wsum - 1.0).abs() < 1e-6);
            prop_assert!((posed[vi] - combo).norm() < 1e-9,
                "vertex {vi} escapes its convex combination");
        }
    }

    /// unproject(project(p)) returns p for points in front of the camera.
    #[test]
    fn projection_roundtrip(
        px in -2.0f64..2.0, py in -2.0f64..2.0, pz in 0.3f64..8.0,
        cam_rot in arb_axis_angle(), cam_t in arb_axis_angle(),
        f in 40.0f64..200.0,
    ) {
        let cam = Camera::new(
            f, f * 1.1, 31.5, 32.5,
            Rigid::new(Mat3::from_axis_angle(cam_rot), cam_t),
            64, 64,
        ).unwrap();
        // Keep only points that project validly.
        let p = Vec3::new(px, py, pz);
        let pr = cam.project(p);
        prop_assume!(pr.valid);
        let back = cam.unproject(pr.x, pr.y, pr.depth);
        prop_assert!((back - p).norm() < 1e-5, "{back:?} vs {p:?}");
    }
}

#[test]
fn axis_angle_log_exp_roundtrip() {
    for aa in [
        Vec3::<f64>::new(0.0, 0.0, 0.0),
        Vec3::new(1e-9, 0.0, 0.0),
        Vec3::new(0.3, -0.4, 0.5),
        Vec3::new(0.0, 0.0, 3.1),
        Vec3::new(2.2, 1.0, -1.4),
    ] {
        let m = Mat3::from_axis_angle(aa);
        let back = Mat3::from_axis_angle(m.to_axis_angle());
        for (a, b) in m.m.iter().zip(back.m.iter()) {
            assert!((a - b).abs() < 1e-7, "{aa:?}");
        }
    }
}
