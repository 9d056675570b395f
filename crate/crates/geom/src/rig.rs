//! Articulated body rig: template mesh, skeleton, convex skin weights, and a
//! per-axis shape scale. Ships with a procedural capsule-blended humanoid
//! (602 vertices, 16 joints); larger rigs load through the same file formats.

use crate::error::{GeomError, Result};
use crate::math::Vec3;
use std::collections::HashMap;
use std::io::{BufRead, Read, Write};
use std::path::Path;
use strata_core::Scalar;

pub const DEFAULT_VERTEX_COUNT: usize = 602;
pub const DEFAULT_JOINT_COUNT: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct BodyRig<T> {
    /// Rest-pose template vertices (metres), before shape scaling.
    pub template: Vec<Vec3<T>>,
    pub faces: Vec<[u32; 3]>,
    /// Rest-pose joint positions, before shape scaling.
    pub joints: Vec<Vec3<T>>,
    /// `parents[0]` is `None` (root); otherwise the parent index, which is
    /// always smaller than the joint's own index.
    pub parents: Vec<Option<usize>>,
    pub joint_names: Vec<String>,
    /// Dense row-major `V x J` convex weights.
    pub weights: Vec<T>,
    /// Per-axis scale standing in for a full shape basis.
    pub shape_scale: Vec3<T>,
}

impl<T: Scalar> BodyRig<T> {
    pub fn vertex_count(&self) -> usize {
        self.template.len()
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn weight(&self, vertex: usize, joint: usize) -> T {
        self.weights[vertex * self.joint_count() + joint]
    }

    /// Template vertex with shape scale applied.
    pub fn scaled_vertex(&self, i: usize) -> Vec3<T> {
        self.template[i].hadamard(self.shape_scale)
    }

    /// Rest joint with shape scale applied.
    pub fn scaled_joint(&self, j: usize) -> Vec3<T> {
        self.joints[j].hadamard(self.shape_scale)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    pub fn validate(&self) -> Result<()> {
        let (v, j) = (self.vertex_count(), self.joint_count());
        if v == 0 || j == 0 {
            return Err(GeomError::InvalidRig("empty rig".into()));
        }
        if self.weights.len() != v * j {
            return Err(GeomError::InvalidRig(format!(
                "weights length {} != V*J = {}",
                self.weights.len(),
                v * j
            )));
        }
        if self.parents.len() != j || self.joint_names.len() != j {
            return Err(GeomError::InvalidRig("parents/names length mismatch".into()));
        }
        if self.parents[0].is_some() {
            return Err(GeomError::InvalidRig("joint 0 must be the root".into()));
        }
        for (idx, p) in self.parents.iter().enumerate().skip(1) {
            match p {
                Some(pi) if *pi < idx => {}
                Some(pi) => {
                    return Err(GeomError::InvalidRig(format!(
                        "joint {idx} has parent {pi}, which does not precede it"
                    )))
                }
                None => {
                    return Err(GeomError::InvalidRig(format!(
                        "joint {idx} is a second root; the tree must be rooted at joint 0"
                    )))
                }
            }
        }
        for f in &self.faces {
            if f.iter().any(|&i| i as usize >= v) {
                return Err(GeomError::InvalidRig(format!("face {f:?} indexes past {v} vertices")));
            }
        }
        let tol = T::cast(1e-6);
        for vi in 0..v {
            let row = &self.weights[vi * j..(vi + 1) * j];
            let mut sum = T::zero();
            for &w in row {
                if w < T::zero() {
                    return Err(GeomError::InvalidRig(format!("negative skin weight at vertex {vi}")));
                }
                sum += w;
            }
            if (sum - T::one()).abs() > tol {
                return Err(GeomError::InvalidRig(format!(
                    "skin weights of vertex {vi} sum to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> BodyRig<U> {
        BodyRig {
            template: self.template.iter().map(|v| v.cast()).collect(),
            faces: self.faces.clone(),
            joints: self.joints.iter().map(|v| v.cast()).collect(),
            parents: self.parents.clone(),
            joint_names: self.joint_names.clone(),
            weights: self.weights.iter().map(|w| U::cast(w.to_f64_lossy())).collect(),
            shape_scale: self.shape_scale.cast(),
        }
    }
}

// ---------------------------------------------------------------------------
// Procedural default rig
// ---------------------------------------------------------------------------

struct CapsuleSpec {
    from: Vec3<f64>,
    to: Vec3<f64>,
    radius: f64,
    slices: usize,
    rings: usize,
    /// Joint whose transform drives this capsule's vertices.
    driver: usize,
}

fn orthonormal_frame(axis: Vec3<f64>) -> (Vec3<f64>, Vec3<f64>) {
    let a = axis.normalized();
    let helper = if a.x.abs() < 0.9 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let u = a.cross(helper).normalized();
    let v = a.cross(u);
    (u, v)
}

fn emit_capsule(spec: &CapsuleSpec, vertices: &mut Vec<Vec3<f64>>, faces: &mut Vec<[u32; 3]>) {
    let base = vertices.len() as u32;
    let (ns, nr) = (spec.slices, spec.rings);
    let axis = spec.to - spec.from;
    let dir = axis.normalized();
    let (u, v) = orthonormal_frame(axis);

    // Pole at the proximal end, slightly extended for roundness.
    vertices.push(spec.from - dir * (spec.radius * 0.6));
    for ri in 0..nr {
        let t = ri as f64 / (nr - 1) as f64;
        // Ellipsoidal radius profile tapers toward both ends.
        let s = (1.0 - (2.0 * t - 1.0).powi(2)).max(0.0).sqrt();
        let rad = spec.radius * (0.25 + 0.75 * s);
        let center = spec.from + axis * t;
        for si in 0..ns {
            let phi = std::f64::consts::TAU * si as f64 / ns as f64;
            vertices.push(center + (u * phi.cos() + v * phi.sin()) * rad);
        }
    }
    vertices.push(spec.to + dir * (spec.radius * 0.6));

    let ring = |r: usize, s: usize| base + 1 + (r * ns + s % ns) as u32;
    let north = base;
    let south = base + 1 + (nr * ns) as u32;
    for s in 0..ns {
        faces.push([north, ring(0, s + 1), ring(0, s)]);
        faces.push([south, ring(nr - 1, s), ring(nr - 1, s + 1)]);
    }
    for r in 0..nr - 1 {
        for s in 0..ns {
            let (a, b, c, d) = (ring(r, s), ring(r, s + 1), ring(r + 1, s + 1), ring(r + 1, s));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
}

fn point_segment_distance(p: Vec3<f64>, a: Vec3<f64>, b: Vec3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (p - a).dot(ab) / len2
    };
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// The procedural desk-scale humanoid: a T-pose capsule blend with 602
/// vertices and 16 joints. Deterministic (no RNG involved).
pub fn default_rig<T: Scalar>() -> BodyRig<T> {
    let joints_f: Vec<(&str, Option<usize>, [f64; 3])> = vec![
        ("pelvis", None, [0.0, 0.95, 0.0]),
        ("spine", Some(0), [0.0, 1.15, 0.0]),
        ("chest", Some(1), [0.0, 1.35, 0.0]),
        ("head", Some(2), [0.0, 1.55, 0.0]),
        ("l_shoulder", Some(2), [0.18, 1.45, 0.0]),
        ("l_elbow", Some(4), [0.46, 1.45, 0.0]),
        ("l_wrist", Some(5), [0.72, 1.45, 0.0]),
        ("r_shoulder", Some(2), [-0.18, 1.45, 0.0]),
        ("r_elbow", Some(7), [-0.46, 1.45, 0.0]),
        ("r_wrist", Some(8), [-0.72, 1.45, 0.0]),
        ("l_hip", Some(0), [0.10, 0.90, 0.0]),
        ("l_knee", Some(10), [0.10, 0.50, 0.0]),
        ("l_ankle", Some(11), [0.10, 0.10, 0.0]),
        ("r_hip", Some(0), [-0.10, 0.90, 0.0]),
        ("r_knee", Some(13), [-0.10, 0.50, 0.0]),
        ("r_ankle", Some(14), [-0.10, 0.10, 0.0]),
    ];
    let jp = |i: usize| Vec3::from_array(joints_f[i].2);
    let up = Vec3::new(0.0, 1.0, 0.0);
    let fwd = Vec3::new(0.0, 0.0, 1.0);

    let capsules = vec![
        // from, to, radius, slices, rings, driver
        CapsuleSpec { from: jp(0), to: jp(1), radius: 0.16, slices: 10, rings: 7, driver: 0 },
        CapsuleSpec { from: jp(1), to: jp(2), radius: 0.15, slices: 10, rings: 7, driver: 1 },
        CapsuleSpec { from: jp(2), to: jp(3), radius: 0.05, slices: 6, rings: 4, driver: 2 },
        CapsuleSpec { from: jp(3), to: jp(3) + up * 0.22, radius: 0.11, slices: 9, rings: 8, driver: 3 },
        CapsuleSpec { from: jp(4), to: jp(5), radius: 0.05, slices: 7, rings: 5, driver: 4 },
        CapsuleSpec { from: jp(5), to: jp(6), radius: 0.04, slices: 6, rings: 5, driver: 5 },
        CapsuleSpec { from: jp(6), to: jp(6) + Vec3::new(0.09, 0.0, 0.0), radius: 0.035, slices: 4, rings: 3, driver: 6 },
        CapsuleSpec { from: jp(7), to: jp(8), radius: 0.05, slices: 7, rings: 5, driver: 7 },
        CapsuleSpec { from: jp(8), to: jp(9), radius: 0.04, slices: 6, rings: 5, driver: 8 },
        CapsuleSpec { from: jp(9), to: jp(9) + Vec3::new(-0.09, 0.0, 0.0), radius: 0.035, slices: 4, rings: 3, driver: 9 },
        CapsuleSpec { from: jp(10), to: jp(11), radius: 0.08, slices: 8, rings: 6, driver: 10 },
        CapsuleSpec { from: jp(11), to: jp(12), radius: 0.055, slices: 6, rings: 5, driver: 11 },
        CapsuleSpec { from: jp(12), to: jp(12) + fwd * 0.12, radius: 0.04, slices: 4, rings: 3, driver: 12 },
        CapsuleSpec { from: jp(13), to: jp(14), radius: 0.08, slices: 8, rings: 6, driver: 13 },
        CapsuleSpec { from: jp(14), to: jp(15), radius: 0.055, slices: 6, rings: 5, driver: 14 },
        CapsuleSpec { from: jp(15), to: jp(15) + fwd * 0.12, radius: 0.04, slices: 4, rings: 3, driver: 15 },
    ];

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for c in &capsules {
        emit_capsule(c, &mut vertices, &mut faces);
    }
    assert_eq!(
        vertices.len(),
        DEFAULT_VERTEX_COUNT,
        "capsule tessellation drifted from the default vertex budget"
    );

    // Soft distance-based weights to capsule cores, accumulated per driver
    // joint, truncated to the strongest three and renormalized.
    let j = joints_f.len();
    let mut weights = vec![0.0f64; vertices.len() * j];
    for (vi, &p) in vertices.iter().enumerate() {
        let mut per_joint = vec![0.0f64; j];
        for c in &capsules {
            let d = point_segment_distance(p, c.from, c.to);
            let sigma = c.radius * 1.2 + 0.03;
            per_joint[c.driver] += (-(d / sigma).powi(2)).exp();
        }
        let mut order: Vec<usize> = (0..j).collect();
        order.sort_by(|&a, &b| per_joint[b].partial_cmp(&per_joint[a]).unwrap());
        let keep = &order[..3];
        let total: f64 = keep.iter().map(|&k| per_joint[k]).sum();
        for &k in keep {
            weights[vi * j + k] = per_joint[k] / total;
        }
        // Force the row sum to exactly 1 by assigning the remainder to the
        // dominant joint.
        let row = &mut weights[vi * j..(vi + 1) * j];
        let sum: f64 = row.iter().sum();
        row[order[0]] += 1.0 - sum;
    }

    let rig = BodyRig {
        template: vertices.iter().map(|v| v.cast()).collect(),
        faces,
        joints: joints_f.iter().map(|(_, _, p)| Vec3::from_array(*p).cast()).collect(),
        parents: joints_f.iter().map(|(_, p, _)| *p).collect(),
        joint_names: joints_f.iter().map(|(n, _, _)| n.to_string()).collect(),
        weights: weights.iter().map(|&w| T::cast(w)).collect(),
        shape_scale: Vec3::new(T::one(), T::one(), T::one()),
    };
    debug_assert!(rig.validate().is_ok());
    rig
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

/// Write the template mesh as Wavefront OBJ (`v` and 1-based `f` lines).
pub fn write_mesh_obj<T: Scalar, W: Write>(w: &mut W, rig: &BodyRig<T>) -> Result<()> {
    for v in &rig.template {
        writeln!(w, "v {} {} {}", v.x.to_f64_lossy(), v.y.to_f64_lossy(), v.z.to_f64_lossy())?;
    }
    for f in &rig.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// Sidecar skeleton/weights format:
/// ```text
/// strata-rig v1
/// joints <J>
/// j <name> <parent|-1> <x> <y> <z>      (J lines)
/// scale <sx> <sy> <sz>
/// weights <V> <J>
/// w <joint>:<weight> [<joint>:<weight> ...]   (V lines)
/// ```
pub fn write_sidecar<T: Scalar, W: Write>(w: &mut W, rig: &BodyRig<T>) -> Result<()> {
    writeln!(w, "strata-rig v1")?;
    writeln!(w, "joints {}", rig.joint_count())?;
    for ji in 0..rig.joint_count() {
        let p = rig.parents[ji].map(|v| v as i64).unwrap_or(-1);
        let pos = rig.joints[ji];
        writeln!(
            w,
            "j {} {} {} {} {}",
            rig.joint_names[ji],
            p,
            pos.x.to_f64_lossy(),
            pos.y.to_f64_lossy(),
            pos.z.to_f64_lossy()
        )?;
    }
    let s = rig.shape_scale;
    writeln!(w, "scale {} {} {}", s.x.to_f64_lossy(), s.y.to_f64_lossy(), s.z.to_f64_lossy())?;
    writeln!(w, "weights {} {}", rig.vertex_count(), rig.joint_count())?;
    for vi in 0..rig.vertex_count() {
        let mut parts = Vec::new();
        for ji in 0..rig.joint_count() {
            let wt = rig.weight(vi, ji);
            if wt != T::zero() {
                parts.push(format!("{}:{}", ji, wt.to_f64_lossy()));
            }
        }
        writeln!(w, "w {}", parts.join(" "))?;
    }
    Ok(())
}

pub fn read_mesh_obj<T: Scalar, R: BufRead>(r: &mut R) -> Result<(Vec<Vec3<T>>, Vec<[u32; 3]>)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("v ") {
            let v: Vec<f64> = crate::camera::parse_fields(rest, "obj vertex")?;
            if v.len() != 3 {
                return Err(GeomError::Parse("obj vertex needs 3 coords".into()));
            }
            vertices.push(Vec3::new(T::cast(v[0]), T::cast(v[1]), T::cast(v[2])));
        } else if let Some(rest) = line.strip_prefix("f ") {
            let f: Vec<u32> = crate::camera::parse_fields(rest, "obj face")?;
            if f.len() != 3 {
                return Err(GeomError::Parse("obj face needs 3 indices".into()));
            }
            if f.iter().any(|&i| i == 0) {
                return Err(GeomError::Parse("obj face indices are 1-based".into()));
            }
            faces.push([f[0] - 1, f[1] - 1, f[2] - 1]);
        }
    }
    Ok((vertices, faces))
}

pub fn read_sidecar<T: Scalar, R: BufRead>(
    r: &mut R,
    vertices: Vec<Vec3<T>>,
    faces: Vec<[u32; 3]>,
) -> Result<BodyRig<T>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| GeomError::Parse("rig: empty sidecar".into()))??;
    if header.trim() != "strata-rig v1" {
        return Err(GeomError::Parse(format!("rig: bad header `{header}`")));
    }
    let jline = lines.next().ok_or_else(|| GeomError::Parse("rig: missing joints line".into()))??;
    let j: usize = jline
        .strip_prefix("joints ")
        .ok_or_else(|| GeomError::Parse("rig: expected `joints <J>`".into()))?
        .trim()
        .parse()
        .map_err(|_| GeomError::Parse("rig: bad joint count".into()))?;

    let mut joint_names = Vec::with_capacity(j);
    let mut parents = Vec::with_capacity(j);
    let mut joints = Vec::with_capacity(j);
    for _ in 0..j {
        let line = lines.next().ok_or_else(|| GeomError::Parse("rig: truncated joints".into()))??;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 || fields[0] != "j" {
            return Err(GeomError::Parse(format!("rig: bad joint line `{line}`")));
        }
        joint_names.push(fields[1].to_string());
        let p: i64 = fields[2].parse().map_err(|_| GeomError::Parse("rig: bad parent".into()))?;
        parents.push(if p < 0 { None } else { Some(p as usize) });
        let coords: Result<Vec<f64>> = fields[3..]
            .iter()
            .map(|t| t.parse().map_err(|_| GeomError::Parse("rig: bad joint coord".into())))
            .collect();
        let c = coords?;
        joints.push(Vec3::new(T::cast(c[0]), T::cast(c[1]), T::cast(c[2])));
    }

    let sline = lines.next().ok_or_else(|| GeomError::Parse("rig: missing scale".into()))??;
    let sv: Vec<f64> = crate::camera::parse_fields(
        sline.strip_prefix("scale ").ok_or_else(|| GeomError::Parse("rig: expected scale".into()))?,
        "rig scale",
    )?;
    let shape_scale = Vec3::new(T::cast(sv[0]), T::cast(sv[1]), T::cast(sv[2]));

    let wline = lines.next().ok_or_else(|| GeomError::Parse("rig: missing weights header".into()))??;
    let wmeta: Vec<usize> = crate::camera::parse_fields(
        wline.strip_prefix("weights ").ok_or_else(|| GeomError::Parse("rig: expected weights".into()))?,
        "rig weights meta",
    )?;
    let [v_count, j_count] = wmeta[..] else {
        return Err(GeomError::Parse("rig: weights meta needs `V J`".into()));
    };
    if v_count != vertices.len() || j_count != j {
        return Err(GeomError::Parse(format!(
            "rig: weights table {v_count}x{j_count} does not match mesh {}x{j}",
            vertices.len()
        )));
    }
    let mut weights = vec![T::zero(); v_count * j];
    for vi in 0..v_count {
        let line = lines.next().ok_or_else(|| GeomError::Parse("rig: truncated weights".into()))??;
        let rest = line.strip_prefix("w").unwrap_or(&line).trim();
        for pair in rest.split_whitespace() {
            let (ji, wv) = pair
                .split_once(':')
                .ok_or_else(|| GeomError::Parse(format!("rig: bad weight pair `{pair}`")))?;
            let ji: usize = ji.parse().map_err(|_| GeomError::Parse("rig: bad joint index".into()))?;
            if ji >= j {
                return Err(GeomError::Parse(format!("rig: weight joint {ji} out of range")));
            }
            let wv: f64 = wv.parse().map_err(|_| GeomError::Parse("rig: bad weight value".into()))?;
            weights[vi * j + ji] = T::cast(wv);
        }
    }

    let rig = BodyRig {
        template: vertices,
        faces,
        joints,
        parents,
        joint_names,
        weights,
        shape_scale,
    };
    rig.validate()?;
    Ok(rig)
}

pub fn save_rig_text<T: Scalar>(rig: &BodyRig<T>, mesh_path: &Path, sidecar_path: &Path) -> Result<()> {
    let mut mesh = std::io::BufWriter::new(std::fs::File::create(mesh_path)?);
    write_mesh_obj(&mut mesh, rig)?;
    let mut side = std::io::BufWriter::new(std::fs::File::create(sidecar_path)?);
    write_sidecar(&mut side, rig)?;
    Ok(())
}

pub fn load_rig_text<T: Scalar>(mesh_path: &Path, sidecar_path: &Path) -> Result<BodyRig<T>> {
    let mut mesh = std::io::BufReader::new(std::fs::File::open(mesh_path)?);
    let (vertices, faces) = read_mesh_obj(&mut mesh)?;
    let mut side = std::io::BufReader::new(std::fs::File::open(sidecar_path)?);
    read_sidecar(&mut side, vertices, faces)
}

const BIN_MAGIC: &[u8; 8] = b"STRATRIG";

/// Little-endian binary alternative for large rigs: magic, u32 version,
/// u32 V/F/J, vertices f32*3V, faces u32*3F, per joint (u16 name length,
/// name bytes, i32 parent, f32*3 position), f32*3 scale, weights f32*V*J.
pub fn save_rig_binary<T: Scalar>(rig: &BodyRig<T>, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(BIN_MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    w.write_all(&(rig.vertex_count() as u32).to_le_bytes())?;
    w.write_all(&(rig.faces.len() as u32).to_le_bytes())?;
    w.write_all(&(rig.joint_count() as u32).to_le_bytes())?;
    for v in &rig.template {
        for c in v.to_array() {
            w.write_all(&(c.to_f64_lossy() as f32).to_le_bytes())?;
        }
    }
    for f in &rig.faces {
        for &i in f {
            w.write_all(&i.to_le_bytes())?;
        }
    }
    for ji in 0..rig.joint_count() {
        let name = rig.joint_names[ji].as_bytes();
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        let p: i32 = rig.parents[ji].map(|v| v as i32).unwrap_or(-1);
        w.write_all(&p.to_le_bytes())?;
        for c in rig.joints[ji].to_array() {
            w.write_all(&(c.to_f64_lossy() as f32).to_le_bytes())?;
        }
    }
    for c in rig.shape_scale.to_array() {
        w.write_all(&(c.to_f64_lossy() as f32).to_le_bytes())?;
    }
    for &wt in &rig.weights {
        w.write_all(&(wt.to_f64_lossy() as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn load_rig_binary<T: Scalar>(path: &Path) -> Result<BodyRig<T>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BIN_MAGIC {
        return Err(GeomError::Parse("rig binary: bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != 1 {
        return Err(GeomError::Parse(format!("rig binary: unsupported version {version}")));
    }
    let v = read_u32(&mut r)? as usize;
    let f = read_u32(&mut r)? as usize;
    let j = read_u32(&mut r)? as usize;
    let mut template = Vec::with_capacity(v);
    for _ in 0..v {
        template.push(Vec3::new(read_f32(&mut r)?, read_f32(&mut r)?, read_f32(&mut r)?));
    }
    let mut faces = Vec::with_capacity(f);
    for _ in 0..f {
        faces.push([read_u32(&mut r)?, read_u32(&mut r)?, read_u32(&mut r)?]);
    }
    let mut joint_names = Vec::with_capacity(j);
    let mut parents = Vec::with_capacity(j);
    let mut joints = Vec::with_capacity(j);
    for _ in 0..j {
        let mut lb = [0u8; 2];
        r.read_exact(&mut lb)?;
        let mut name = vec![0u8; u16::from_le_bytes(lb) as usize];
        r.read_exact(&mut name)?;
        joint_names.push(String::from_utf8(name).map_err(|_| GeomError::Parse("rig binary: bad name".into()))?);
        let mut pb = [0u8; 4];
        r.read_exact(&mut pb)?;
        let p = i32::from_le_bytes(pb);
        parents.push(if p < 0 { None } else { Some(p as usize) });
        joints.push(Vec3::new(read_f32(&mut r)?, read_f32(&mut r)?, read_f32(&mut r)?));
    }
    let shape_scale = Vec3::new(read_f32(&mut r)?, read_f32(&mut r)?, read_f32(&mut r)?);
    let mut weights = Vec::with_capacity(v * j);
    for _ in 0..v * j {
        weights.push(read_f32(&mut r)?);
    }
    let rig = BodyRig {
        template,
        faces,
        joints,
        parents,
        joint_names,
        weights,
        shape_scale,
    };
    rig.validate()?;
    Ok(rig)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32<T: Scalar, R: Read>(r: &mut R) -> Result<T> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(T::cast(f32::from_le_bytes(b) as f64))
}

/// Per-vertex color assignment keyed by dominant joint, used by the synthetic
/// renderer and identity tests.
pub fn dominant_joint<T: Scalar>(rig: &BodyRig<T>, vertex: usize) -> usize {
    let j = rig.joint_count();
    let row = &rig.weights[vertex * j..(vertex + 1) * j];
    let mut best = 0;
    for (i, w) in row.iter().enumerate() {
        if *w > row[best] {
            best = i;
        }
    }
    best
}

pub fn joint_children<T: Scalar>(rig: &BodyRig<T>) -> HashMap<usize, Vec<usize>> {
    let mut map: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, p) in rig.parents.iter().enumerate() {
        if let Some(p) = p {
            map.entry(*p).or_default().push(i);
        }
    }
    map
}
