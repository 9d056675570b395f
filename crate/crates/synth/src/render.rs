//! Z-buffered rendering of a scene spec with exact ground truth: the
//! background plane is ray-traced analytically, the character is rasterized
//! from the skinned rig, and occluder primitives are evaluated per pixel on
//! their depth planes. No lighting; colors are flat or vertex-interpolated.

use crate::error::{Result, SynthError};
use crate::motion::{camera_at, pose_at};
use crate::spec::{Background, OccluderShape, SceneSpec};
use rand::Rng;
use strata_core::rng::seed_stream;
use strata_geom::canonical::{render_canonical, SampledColors};
use strata_geom::{
    default_rig, pose_vertices, rasterize_mesh, BodyRig, Camera, CanonicalImage, PoseParams,
    RasterTarget, ScreenVertex, Vec3,
};
use strata_video::clip::{DepthClip, InstanceClip, LayerRole, LayeredClip, Masklet, VideoClip};
use strata_video::formats::ClipMeta;

pub const HUMAN_ID: u16 = 1;
/// Object instance ids start after the human.
pub const FIRST_OBJECT_ID: u16 = 2;

/// Everything the renderer knows exactly.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub depth: DepthClip,
    pub instances: InstanceClip,
    pub meta: ClipMeta,
    pub poses: Vec<PoseParams<f64>>,
    pub cameras: Vec<Camera<f64>>,
    /// Direct A-pose render with the true vertex colors.
    pub canonical: CanonicalImage<f64>,
    /// Unoccluded character coverage per frame.
    pub human_full: Masklet,
    /// Character-only render over black (only when `spec.emit_aux`).
    pub human_solo: Option<VideoClip>,
    /// True per-vertex colors in [0, 1].
    pub vertex_colors: Vec<[f64; 3]>,
}

/// Per-part palette expanded to per-vertex colors with a little jitter.
pub fn vertex_palette(rig: &BodyRig<f64>, palette_seed: u64) -> Vec<[f64; 3]> {
    let mut rng = seed_stream(palette_seed, "palette", 0);
    let part_colors: Vec<[f64; 3]> = (0..rig.joint_count())
        .map(|_| {
            [
                rng.gen_range(0.15..1.0),
                rng.gen_range(0.15..1.0),
                rng.gen_range(0.15..1.0),
            ]
        })
        .collect();
    let mut jitter = seed_stream(palette_seed, "palette-jitter", 0);
    (0..rig.vertex_count())
        .map(|vi| {
            let base = part_colors[strata_geom::rig::dominant_joint(rig, vi)];
            let mut c = base;
            for ch in &mut c {
                *ch = (*ch + jitter.gen_range(-0.04..0.04)).clamp(0.0, 1.0);
            }
            c
        })
        .collect()
}

pub fn background_color(bg: &Background, x: f64, y: f64) -> [u8; 3] {
    match bg {
        Background::Checker { scale, c1, c2 } => {
            let ix = (x / scale).floor() as i64;
            let iy = (y / scale).floor() as i64;
            if (ix + iy).rem_euclid(2) == 0 {
                *c1
            } else {
                *c2
            }
        }
        Background::Stripes { scale, angle, c1, c2 } => {
            let u = x * angle.cos() + y * angle.sin();
            if (u / scale).floor().rem_euclid(2.0) < 1.0 {
                *c1
            } else {
                *c2
            }
        }
        Background::Gradient { horizontal, c1, c2 } => {
            let u = if *horizontal { x } else { y };
            let t = ((u + 6.0) / 12.0).clamp(0.0, 1.0);
            let mut out = [0u8; 3];
            for i in 0..3 {
                out[i] = (c1[i] as f64 + (c2[i] as f64 - c1[i] as f64) * t).round() as u8;
            }
            out
        }
        Background::Blobs { base, blobs } => {
            let mut acc = [base[0] as f64, base[1] as f64, base[2] as f64];
            for (center, radius, color) in blobs {
                let d2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                let a = (-d2 / (radius * radius)).exp();
                for i in 0..3 {
                    acc[i] = acc[i] * (1.0 - a) + color[i] as f64 * a;
                }
            }
            [
                acc[0].round() as u8,
                acc[1].round() as u8,
                acc[2].round() as u8,
            ]
        }
    }
}

fn occluder_center(o: &crate::spec::ObjectSpec, t: usize) -> [f64; 2] {
    let tf = t as f64;
    let wob = std::f64::consts::TAU * o.wobble_freq * tf + o.phase;
    [
        o.center[0] + o.velocity[0] * tf + o.wobble_amp[0] * wob.sin(),
        o.center[1] + o.velocity[1] * tf + o.wobble_amp[1] * wob.cos(),
    ]
}

fn inside_occluder(o: &crate::spec::ObjectSpec, t: usize, x: f64, y: f64) -> bool {
    let c = occluder_center(o, t);
    match o.shape {
        OccluderShape::Disc { radius } => {
            (x - c[0]).powi(2) + (y - c[1]).powi(2) <= radius * radius
        }
        OccluderShape::Bar {
            half_len,
            half_width,
            angle0,
            spin,
        } => {
            let ang = angle0 + spin * t as f64;
            let (dx, dy) = (ang.cos(), ang.sin());
            // Capsule: distance to the central segment within half_width.
            let (px, py) = (x - c[0], y - c[1]);
            let s = (px * dx + py * dy).clamp(-half_len, half_len);
            let (qx, qy) = (px - s * dx, py - s * dy);
            qx * qx + qy * qy <= half_width * half_width
        }
    }
}

/// One frame of the character alone over an empty target.
pub struct CharacterRender {
    pub rgb: Vec<u8>,
    pub mask: Vec<u8>,
    pub depth: Vec<f64>,
}

pub fn render_character(
    rig: &BodyRig<f64>,
    colors: &[[f64; 3]],
    pose: &PoseParams<f64>,
    camera: &Camera<f64>,
) -> Result<CharacterRender> {
    let (w, h) = (camera.width, camera.height);
    let posed = pose_vertices(rig, pose)?;
    let screen: Vec<ScreenVertex<f64>> = posed
        .iter()
        .map(|&p| {
            let pr = camera.project(p);
            ScreenVertex {
                x: pr.x,
                y: pr.y,
                depth: pr.depth,
                valid: pr.valid,
            }
        })
        .collect();
    let attrs: Vec<f64> = colors.iter().flatten().copied().collect();
    let mut target = RasterTarget::new(w, h, 3);
    rasterize_mesh(&mut target, &screen, &rig.faces, &attrs, HUMAN_ID as i32);

    let hw = w * h;
    let mut rgb = vec![0u8; hw * 3];
    let mut mask = vec![0u8; hw];
    for i in 0..hw {
        if target.object[i] >= 0 {
            mask[i] = 1;
            for c in 0..3 {
                rgb[i * 3 + c] = (target.attr[c * hw + i].clamp(0.0, 1.0) * 255.0).round() as u8;
            }
        }
    }
    Ok(CharacterRender {
        rgb,
        mask,
        depth: target.depth,
    })
}

/// Render the full clip with ground truth. Fails if the character never
/// reaches the frustum (an unusable clip).
pub fn render_clip(spec: &SceneSpec) -> Result<(VideoClip, GroundTruth)> {
    let mut rig = default_rig::<f64>();
    rig.shape_scale = Vec3::new(
        spec.character.scale[0],
        spec.character.scale[1],
        spec.character.scale[2],
    );
    let colors = vertex_palette(&rig, spec.character.palette_seed);
    let attrs: Vec<f64> = colors.iter().flatten().copied().collect();

    let (w, h, n) = (spec.width, spec.height, spec.frames);
    let hw = w * h;
    let mut video = VideoClip::black(n, h, w);
    let mut depth = DepthClip::filled(n, h, w, f32::INFINITY);
    let mut instances = InstanceClip::empty(n, h, w);
    let mut human_full = Masklet::zeros(LayerRole::Human, n, h, w);
    let mut human_solo = spec.emit_aux.then(|| VideoClip::black(n, h, w));
    let mut poses = Vec::with_capacity(n);
    let mut cameras = Vec::with_capacity(n);

    for t in 0..n {
        let camera: Camera<f64> = camera_at(spec, t);
        let pose = pose_at(spec, &rig, t);

        // Background plane, ray-traced per pixel.
        let cam_inv = camera.extrinsic.inverse();
        let cam_center = cam_inv.trans;
        let mut target = RasterTarget::new(w, h, 3);
        target.object.fill(0); // background id 0
        for py in 0..h {
            for px in 0..w {
                let u = px as f64 + 0.5;
                let v = py as f64 + 0.5;
                let dir_cam = Vec3::new((u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0);
                let dir_world = cam_inv.rot.mul_vec(dir_cam);
                let i = py * w + px;
                if dir_world.z.abs() < 1e-12 {
                    target.depth[i] = f64::INFINITY;
                    continue;
                }
                let s = (spec.background_depth - cam_center.z) / dir_world.z;
                let p = cam_center + dir_world * s;
                let c = background_color(&spec.background, p.x, p.y);
                for ch in 0..3 {
                    target.attr[ch * hw + i] = c[ch] as f64 / 255.0;
                }
                target.depth[i] = s; // camera-space z of the hit
            }
        }

        // Character against the background depth.
        let posed = pose_vertices(&rig, &pose)?;
        let screen: Vec<ScreenVertex<f64>> = posed
            .iter()
            .map(|&p| {
                let pr = camera.project(p);
                ScreenVertex {
                    x: pr.x,
                    y: pr.y,
                    depth: pr.depth,
                    valid: pr.valid,
                }
            })
            .collect();
        rasterize_mesh(&mut target, &screen, &rig.faces, &attrs, HUMAN_ID as i32);

        // Occluder primitives, analytically per pixel.
        for (oi, obj) in spec.objects.iter().enumerate() {
            let id = FIRST_OBJECT_ID + oi as u16;
            for py in 0..h {
                for px in 0..w {
                    let i = py * w + px;
                    let u = px as f64 + 0.5;
                    let v = py as f64 + 0.5;
                    let dir_cam =
                        Vec3::new((u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0);
                    let dir_world = cam_inv.rot.mul_vec(dir_cam);
                    if dir_world.z.abs() < 1e-12 {
                        continue;
                    }
                    let s = (obj.depth - cam_center.z) / dir_world.z;
                    if s <= 0.0 || s >= target.depth[i] {
                        continue;
                    }
                    let p = cam_center + dir_world * s;
                    if inside_occluder(obj, t, p.x, p.y) {
                        target.depth[i] = s;
                        target.object[i] = id as i32;
                        for ch in 0..3 {
                            target.attr[ch * hw + i] = obj.color[ch] as f64 / 255.0;
                        }
                    }
                }
            }
        }

        // Commit the frame.
        let frame = video.frame_mut(t);
        for i in 0..hw {
            for ch in 0..3 {
                frame[i * 3 + ch] = (target.attr[ch * hw + i].clamp(0.0, 1.0) * 255.0).round() as u8;
            }
        }
        let df = depth.frame_mut(t);
        for i in 0..hw {
            df[i] = target.depth[i] as f32;
        }
        let inf = instances.frame_mut(t);
        for i in 0..hw {
            inf[i] = target.object[i].max(0) as u16;
        }

        // Unoccluded character coverage (and the solo render when asked).
        let solo = render_character(&rig, &colors, &pose, &camera)?;
        human_full.frame_mut(t).copy_from_slice(&solo.mask);
        if let Some(sv) = human_solo.as_mut() {
            sv.frame_mut(t).copy_from_slice(&solo.rgb);
        }

        poses.push(pose);
        cameras.push(camera);
    }

    if human_full.count_ones() == 0 {
        return Err(SynthError::UnusableClip(
            "character never enters the camera frustum".into(),
        ));
    }

    // Layer labels by the same depth-ordering rule the decomposition uses,
    // guaranteeing ground-truth self-consistency.
    let layered = LayeredClip {
        video: video.clone(),
        depth: depth.clone(),
        instances: instances.clone(),
        human_id: HUMAN_ID,
    };
    let (_, _, _, assignment) = strata_video::assign_layers(&layered)?;

    let canonical = {
        let sampled = SampledColors {
            rgb: colors.iter().flatten().copied().collect(),
            alpha: vec![1.0; rig.vertex_count()],
        };
        render_canonical(&rig, &sampled, w.min(h), w.min(h))?
    };

    let meta = ClipMeta {
        seed: spec.seed,
        frames: n,
        height: h,
        width: w,
        human_id: HUMAN_ID,
        objects: assignment.objects.clone(),
    };

    Ok((
        video,
        GroundTruth {
            depth,
            instances,
            meta,
            poses,
            cameras,
            canonical,
            human_full,
            human_solo,
            vertex_colors: colors,
        },
    ))
}
