//! Canonical appearance transfer: sample per-vertex colors from a posed
//! frame (respecting visibility), then re-render the body in the fixed
//! A-pose under a frontal canonical camera. Vertices without color evidence
//! stay transparent.

use crate::camera::Camera;
use crate::error::{GeomError, Result};
use crate::kinematics::pose_vertices;
use crate::math::Vec3;
use crate::pose::{a_pose, PoseParams};
use crate::raster::{rasterize_mesh, RasterTarget, ScreenVertex};
use crate::rig::BodyRig;
use strata_core::{Scalar, Tensor};

/// RGBA image in `[0, 1]`, planar `4 x height x width`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalImage<T> {
    pub width: usize,
    pub height: usize,
    pub rgba: Vec<T>,
}

impl<T: Scalar> CanonicalImage<T> {
    pub fn transparent(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgba: vec![T::zero(); 4 * width * height],
        }
    }

    pub fn alpha(&self, px: usize, py: usize) -> T {
        self.rgba[3 * self.width * self.height + py * self.width + px]
    }

    pub fn max_alpha(&self) -> T {
        let hw = self.width * self.height;
        self.rgba[3 * hw..]
            .iter()
            .fold(T::zero(), |m, &v| m.max(v))
    }

    /// As a `[4, 1, h, w]` tensor for the identity encoder.
    pub fn to_tensor<U: Scalar>(&self) -> Tensor<U> {
        Tensor::new(
            &[4, 1, self.height, self.width],
            self.rgba.iter().map(|v| U::cast(v.to_f64_lossy())).collect(),
        )
        .expect("shape matches layout")
    }
}

/// Frontal camera fitted to the A-posed rig with a margin.
pub fn canonical_camera<T: Scalar>(rig: &BodyRig<T>, width: usize, height: usize) -> Result<Camera<T>> {
    let pose = a_pose(rig)?;
    let verts = pose_vertices(rig, &pose)?;
    let mut lo = verts[0];
    let mut hi = verts[0];
    for v in &verts {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let center = (lo + hi) * T::cast(0.5);
    let extent = (hi.x - lo.x).max(hi.y - lo.y) * T::cast(1.15);
    let dist = T::cast(3.0);
    let f = T::cast(width as f64) * dist / extent;
    Camera::facing_z(
        f,
        T::cast(width as f64 / 2.0),
        T::cast(height as f64 / 2.0),
        Vec3::new(center.x, center.y, center.z - dist),
        width,
        height,
    )
}

/// Per-vertex colors sampled from a posed frame, with visibility flags.
#[derive(Clone, Debug)]
pub struct SampledColors<T> {
    /// `V x 3`, rgb in `[0, 1]`; meaningless where `alpha == 0`.
    pub rgb: Vec<T>,
    /// 1 where the vertex was visible and color evidence exists, else 0.
    pub alpha: Vec<T>,
}

/// Sample colors at each projected vertex with mask-aware bilinear taps. A
/// vertex contributes only if it is visible — one of its incident triangles
/// must own a pixel next to its projection in the z-buffered render, which
/// rejects back-facing and self-occluded surface points exactly — and at
/// least one bilinear tap lands on a masked human pixel.
pub fn sample_vertex_colors<T: Scalar>(
    rig: &BodyRig<T>,
    pose: &PoseParams<T>,
    camera: &Camera<T>,
    rgb: &[u8],
    mask: &[u8],
    width: usize,
    height: usize,
) -> Result<SampledColors<T>> {
    if rgb.len() != width * height * 3 || mask.len() != width * height {
        return Err(GeomError::Invalid(format!(
            "frame buffers do not match {width}x{height}"
        )));
    }
    let posed = pose_vertices(rig, pose)?;
    let screen: Vec<ScreenVertex<T>> = posed
        .iter()
        .map(|&p| {
            let pr = camera.rescaled(width, height).project(p);
            ScreenVertex {
                x: pr.x,
                y: pr.y,
                depth: pr.depth,
                valid: pr.valid,
            }
        })
        .collect();
    let mut vis_target = RasterTarget::new(width, height, 0);
    rasterize_mesh(&mut vis_target, &screen, &rig.faces, &[], 0);

    let vertex_visible = |vi: usize, px: i64, py: i64| -> bool {
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let (qx, qy) = (px + dx, py + dy);
                if qx < 0 || qy < 0 || qx >= width as i64 || qy >= height as i64 {
                    continue;
                }
                let f = vis_target.face[qy as usize * width + qx as usize];
                if f >= 0 && rig.faces[f as usize].contains(&(vi as u32)) {
                    return true;
                }
            }
        }
        false
    };

    let mut out = SampledColors {
        rgb: vec![T::zero(); rig.vertex_count() * 3],
        alpha: vec![T::zero(); rig.vertex_count()],
    };
    for (vi, sv) in screen.iter().enumerate() {
        if !sv.valid {
            continue;
        }
        let (x, y) = (sv.x.to_f64_lossy(), sv.y.to_f64_lossy());
        if x < 0.0 || y < 0.0 || x >= width as f64 || y >= height as f64 {
            continue;
        }
        let (px, py) = (x as usize, y as usize);
        if !vertex_visible(vi, px as i64, py as i64) {
            continue;
        }
        // Mask-weighted bilinear taps around the sample point.
        let gx = x - 0.5;
        let gy = y - 0.5;
        let x0 = gx.floor();
        let y0 = gy.floor();
        let fx = gx - x0;
        let fy = gy - y0;
        let mut acc = [0.0f64; 3];
        let mut wsum = 0.0f64;
        for (dx, dy, w) in [
            (0.0, 0.0, (1.0 - fx) * (1.0 - fy)),
            (1.0, 0.0, fx * (1.0 - fy)),
            (0.0, 1.0, (1.0 - fx) * fy),
            (1.0, 1.0, fx * fy),
        ] {
            let tx = x0 + dx;
            let ty = y0 + dy;
            if tx < 0.0 || ty < 0.0 || tx >= width as f64 || ty >= height as f64 {
                continue;
            }
            let (tx, ty) = (tx as usize, ty as usize);
            if mask[ty * width + tx] == 0 {
                continue;
            }
            let base = (ty * width + tx) * 3;
            acc[0] += w * rgb[base] as f64 / 255.0;
            acc[1] += w * rgb[base + 1] as f64 / 255.0;
            acc[2] += w * rgb[base + 2] as f64 / 255.0;
            wsum += w;
        }
        if wsum < 1e-9 {
            continue;
        }
        out.rgb[vi * 3] = T::cast(acc[0] / wsum);
        out.rgb[vi * 3 + 1] = T::cast(acc[1] / wsum);
        out.rgb[vi * 3 + 2] = T::cast(acc[2] / wsum);
        out.alpha[vi] = T::one();
    }
    Ok(out)
}

/// Render sampled (or known) vertex colors in the A-pose under the canonical
/// camera. Alpha is interpolated, so pixels touching invisible vertices fade
/// to transparent.
pub fn render_canonical<T: Scalar>(
    rig: &BodyRig<T>,
    colors: &SampledColors<T>,
    out_width: usize,
    out_height: usize,
) -> Result<CanonicalImage<T>> {
    let pose = a_pose(rig)?;
    let cam = canonical_camera(rig, out_width, out_height)?;
    let verts = pose_vertices(rig, &pose)?;
    let screen: Vec<ScreenVertex<T>> = verts
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
    let mut attrs = vec![T::zero(); rig.vertex_count() * 4];
    for vi in 0..rig.vertex_count() {
        // Premultiplied by alpha: invisible vertices contribute blackness to
        // rgb but drag alpha down with them, keeping edges clean.
        let a = colors.alpha[vi];
        attrs[vi * 4] = colors.rgb[vi * 3] * a;
        attrs[vi * 4 + 1] = colors.rgb[vi * 3 + 1] * a;
        attrs[vi * 4 + 2] = colors.rgb[vi * 3 + 2] * a;
        attrs[vi * 4 + 3] = a;
    }
    let mut target = RasterTarget::new(out_width, out_height, 4);
    rasterize_mesh(&mut target, &screen, &rig.faces, &attrs, 0);

    // Un-premultiply where alpha is meaningful.
    let hw = out_width * out_height;
    let mut rgba = vec![T::zero(); 4 * hw];
    for i in 0..hw {
        let a = target.attr[3 * hw + i];
        if a > T::cast(1e-6) {
            rgba[i] = target.attr[i] / a;
            rgba[hw + i] = target.attr[hw + i] / a;
            rgba[2 * hw + i] = target.attr[2 * hw + i] / a;
            rgba[3 * hw + i] = a;
        }
    }
    Ok(CanonicalImage {
        width: out_width,
        height: out_height,
        rgba,
    })
}

/// Full canonical appearance transfer for one frame of the masked human
/// component. An empty mask yields an all-transparent image.
#[allow(clippy::too_many_arguments)]
pub fn canonicalize<T: Scalar>(
    rig: &BodyRig<T>,
    pose: &PoseParams<T>,
    camera: &Camera<T>,
    rgb: &[u8],
    mask: &[u8],
    width: usize,
    height: usize,
    out_size: usize,
) -> Result<CanonicalImage<T>> {
    if mask.iter().all(|&m| m == 0) {
        return Ok(CanonicalImage::transparent(out_size, out_size));
    }
    let colors = sample_vertex_colors(rig, pose, camera, rgb, mask, width, height)?;
    render_canonical(rig, &colors, out_size, out_size)
}
