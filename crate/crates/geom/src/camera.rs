//! Pinhole camera with explicit extrinsics.

use crate::error::{GeomError, Result};
use crate::math::{Rigid, Vec3};
use std::io::{BufRead, Write};
use strata_core::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    /// World-to-camera transform.
    pub extrinsic: Rigid<T>,
    pub width: usize,
    pub height: usize,
}

/// A projected point: pixel coordinates plus camera-space depth. Points at or
/// behind the camera plane are flagged invalid rather than raising an error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projected<T> {
    pub x: T,
    pub y: T,
    pub depth: T,
    pub valid: bool,
}

const MIN_DEPTH: f64 = 1e-9;

impl<T: Scalar> Camera<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, extrinsic: Rigid<T>, width: usize, height: usize) -> Result<Self> {
        if fx <= T::zero() || fy <= T::zero() {
            return Err(GeomError::InvalidCamera("focal lengths must be positive".into()));
        }
        if width == 0 || height == 0 {
            return Err(GeomError::InvalidCamera("image extents must be positive".into()));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            extrinsic,
            width,
            height,
        })
    }

    /// Axis-aligned camera at `position` looking down +z, no rotation.
    pub fn facing_z(fx: T, cx: T, cy: T, position: Vec3<T>, width: usize, height: usize) -> Result<Self> {
        let extrinsic = Rigid::new(crate::math::Mat3::identity(), -position);
        Self::new(fx, fx, cx, cy, extrinsic, width, height)
    }

    pub fn project(&self, p: Vec3<T>) -> Projected<T> {
        let c = self.extrinsic.apply(p);
        if c.z <= T::cast(MIN_DEPTH) {
            return Projected {
                x: T::zero(),
                y: T::zero(),
                depth: c.z,
                valid: false,
            };
        }
        Projected {
            x: self.fx * c.x / c.z + self.cx,
            y: self.fy * c.y / c.z + self.cy,
            depth: c.z,
            valid: true,
        }
    }

    /// Inverse of [`Self::project`] for valid points.
    pub fn unproject(&self, x: T, y: T, depth: T) -> Vec3<T> {
        let cam = Vec3::new(
            (x - self.cx) * depth / self.fx,
            (y - self.cy) * depth / self.fy,
            depth,
        );
        self.extrinsic.inverse().apply(cam)
    }

    /// Copy with intrinsics rescaled to a different raster size.
    pub fn rescaled(&self, width: usize, height: usize) -> Self {
        let sx = T::cast(width as f64 / self.width as f64);
        let sy = T::cast(height as f64 / self.height as f64);
        Self {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            extrinsic: self.extrinsic,
            width,
            height,
        }
    }
}

/// Per-frame camera track with fixed intrinsics.
///
/// Text format:
/// ```text
/// strata-camera v1
/// <n> <width> <height>
/// <fx> <fy> <cx> <cy>
/// r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz   (one line per frame)
/// ```
pub fn write_camera_track<T: Scalar, W: Write>(w: &mut W, cams: &[Camera<T>]) -> Result<()> {
    let first = cams.first().ok_or_else(|| GeomError::InvalidCamera("empty track".into()))?;
    writeln!(w, "strata-camera v1")?;
    writeln!(w, "{} {} {}", cams.len(), first.width, first.height)?;
    writeln!(
        w,
        "{} {} {} {}",
        first.fx.to_f64_lossy(),
        first.fy.to_f64_lossy(),
        first.cx.to_f64_lossy(),
        first.cy.to_f64_lossy()
    )?;
    for c in cams {
        let m = &c.extrinsic.rot.m;
        let t = c.extrinsic.trans;
        let vals: Vec<String> = m
            .iter()
            .map(|v| v.to_f64_lossy().to_string())
            .chain([t.x, t.y, t.z].iter().map(|v| v.to_f64_lossy().to_string()))
            .collect();
        writeln!(w, "{}", vals.join(" "))?;
    }
    Ok(())
}

pub fn read_camera_track<T: Scalar, R: BufRead>(r: &mut R) -> Result<Vec<Camera<T>>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| GeomError::Parse("camera: empty file".into()))??;
    if header.trim() != "strata-camera v1" {
        return Err(GeomError::Parse(format!("camera: bad header `{header}`")));
    }
    let meta = lines
        .next()
        .ok_or_else(|| GeomError::Parse("camera: missing meta line".into()))??;
    let meta: Vec<usize> = parse_fields(&meta, "camera meta")?;
    let [n, width, height] = meta[..] else {
        return Err(GeomError::Parse("camera: meta needs `n width height`".into()));
    };
    let intr_line = lines
        .next()
        .ok_or_else(|| GeomError::Parse("camera: missing intrinsics".into()))??;
    let intr: Vec<f64> = parse_fields(&intr_line, "camera intrinsics")?;
    let [fx, fy, cx, cy] = intr[..] else {
        return Err(GeomError::Parse("camera: intrinsics need 4 fields".into()));
    };
    let mut cams = Vec::with_capacity(n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| GeomError::Parse(format!("camera: missing frame {i}")))??;
        let v: Vec<f64> = parse_fields(&line, "camera frame")?;
        if v.len() != 12 {
            return Err(GeomError::Parse(format!("camera: frame {i} needs 12 fields")));
        }
        let mut m = [T::zero(); 9];
        for (o, &x) in m.iter_mut().zip(&v[..9]) {
            *o = T::cast(x);
        }
        let extr = Rigid::new(
            crate::math::Mat3 { m },
            Vec3::new(T::cast(v[9]), T::cast(v[10]), T::cast(v[11])),
        );
        cams.push(Camera::new(
            T::cast(fx),
            T::cast(fy),
            T::cast(cx),
            T::cast(cy),
            extr,
            width,
            height,
        )?);
    }
    Ok(cams)
}

pub(crate) fn parse_fields<F: std::str::FromStr>(line: &str, what: &str) -> Result<Vec<F>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<F>()
                .map_err(|_| GeomError::Parse(format!("{what}: bad field `{tok}`")))
        })
        .collect()
}
