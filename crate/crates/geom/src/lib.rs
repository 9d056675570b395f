//! Body geometry: an articulated SMPL-analog rig with forward kinematics and
//! linear-blend skinning, pinhole projection, a z-buffered software
//! rasterizer, canonical A-pose appearance transfer, and structured motion
//! feature maps.
//!
//! Everything is generic over the scalar type; oracles and ground truth use
//! f64 (aliases below), model-facing outputs cast to f32 at the boundary.

pub mod camera;
pub mod canonical;
pub mod error;
pub mod kinematics;
pub mod math;
pub mod motionmap;
pub mod pose;
pub mod raster;
pub mod rig;

pub use camera::{Camera, Projected};
pub use canonical::{canonicalize, canonical_camera, CanonicalImage};
pub use error::{GeomError, Result};
pub use kinematics::{forward_kinematics, pose_vertices, skin, JointTransform};
pub use math::{Mat3, Rigid, Vec2, Vec3};
pub use motionmap::{maps_to_tensor, rasterize_codes, MotionFeatureMap, VertexCodes};
pub use pose::{a_pose, PoseParams};
pub use raster::{rasterize_mesh, RasterTarget, ScreenVertex};
pub use rig::{default_rig, BodyRig};

/// Verification-precision aliases; geometry oracles run at f64.
pub type Vec3d = Vec3<f64>;
pub type BodyRig64 = BodyRig<f64>;
pub type Camera64 = Camera<f64>;
pub type PoseParams64 = PoseParams<f64>;
