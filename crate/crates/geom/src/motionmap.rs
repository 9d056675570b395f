//! Structured motion features: fixed per-vertex latent codes, posed and
//! projected, rasterized into dense 2D maps with a coverage mask.

use crate::camera::Camera;
use crate::error::Result;
use crate::kinematics::pose_vertices;
use crate::pose::PoseParams;
use crate::raster::{rasterize_mesh, RasterTarget, ScreenVertex};
use crate::rig::BodyRig;
use strata_core::rng::seed_stream;
use strata_core::{Scalar, Tensor};

pub const DEFAULT_CODE_DIM: usize = 8;

/// One latent row per rig vertex. Codes are drawn once from a seeded unit
/// Gaussian and stay fixed afterwards, so covered pixels are always convex
/// combinations of the same identifiable rows.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexCodes<T> {
    pub dim: usize,
    /// `V x dim` row-major.
    pub data: Vec<T>,
}

impl<T: Scalar> VertexCodes<T> {
    pub fn init(vertex_count: usize, dim: usize, seed: u64) -> Self {
        let mut rng = seed_stream(seed, "vertex-codes", 0);
        let t = Tensor::<T>::randn(&[vertex_count, dim], &mut rng);
        Self {
            dim,
            data: t.into_data(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, v: usize) -> &[T] {
        &self.data[v * self.dim..(v + 1) * self.dim]
    }
}

/// Dense per-frame feature map: `dim` planes plus a 0/1 coverage plane.
/// Uncovered pixels are exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionFeatureMap<T> {
    pub width: usize,
    pub height: usize,
    pub dim: usize,
    /// Planar `dim x height x width`.
    pub data: Vec<T>,
    pub coverage: Vec<T>,
}

/// Pose, project, and rasterize the vertex codes for one frame. The camera's
/// intrinsics are rescaled if the output extents differ from the camera's.
pub fn rasterize_codes<T: Scalar>(
    rig: &BodyRig<T>,
    pose: &PoseParams<T>,
    camera: &Camera<T>,
    codes: &VertexCodes<T>,
    out_width: usize,
    out_height: usize,
) -> Result<MotionFeatureMap<T>> {
    assert_eq!(
        codes.vertex_count(),
        rig.vertex_count(),
        "codes must align with the rig"
    );
    let cam = if camera.width == out_width && camera.height == out_height {
        *camera
    } else {
        camera.rescaled(out_width, out_height)
    };
    let posed = pose_vertices(rig, pose)?;
    let verts: Vec<ScreenVertex<T>> = posed
        .iter()
        .map(|&p| {
            let pr = cam.project(p);
            ScreenVertex {
                x: pr.x,
                y: pr.y,
                depth: pr.depth,
                valid: pr.valid,
            }
        })
        .collect();
    let mut target = RasterTarget::new(out_width, out_height, codes.dim);
    rasterize_mesh(&mut target, &verts, &rig.faces, &codes.data, 0);
    let coverage = target
        .object
        .iter()
        .map(|&o| if o >= 0 { T::one() } else { T::zero() })
        .collect();
    Ok(MotionFeatureMap {
        width: out_width,
        height: out_height,
        dim: codes.dim,
        data: target.attr,
        coverage,
    })
}

/// Stack maps into a `[dim + 1, frames, h, w]` tensor (codes then coverage),
/// the input layout of the pose encoder.
pub fn maps_to_tensor<T: Scalar, U: Scalar>(maps: &[MotionFeatureMap<T>]) -> Tensor<U> {
    assert!(!maps.is_empty());
    let (w, h, d) = (maps[0].width, maps[0].height, maps[0].dim);
    let n = maps.len();
    let hw = w * h;
    let mut out = Tensor::zeros(&[d + 1, n, h, w]);
    for (t, m) in maps.iter().enumerate() {
        assert_eq!((m.width, m.height, m.dim), (w, h, d), "inconsistent map extents");
        for c in 0..d {
            let src = &m.data[c * hw..(c + 1) * hw];
            let dst = &mut out.data_mut()[(c * n + t) * hw..][..hw];
            for (o, &v) in dst.iter_mut().zip(src) {
                *o = U::cast(v.to_f64_lossy());
            }
        }
        let dst = &mut out.data_mut()[(d * n + t) * hw..][..hw];
        for (o, &v) in dst.iter_mut().zip(&m.coverage) {
            *o = U::cast(v.to_f64_lossy());
        }
    }
    out
}
