//! On-disk formats. Every format is documented byte-exactly here:
//!
//! - **Frames**: numbered lossless PNGs `frames/frame_%04d.png` (8-bit RGB).
//! - **Depth** (`depth.bin`): ASCII header `strata-depth v1\n<n> <h> <w>\n`,
//!   then `n*h*w` little-endian f32 planes in frame order.
//! - **Masklet** (`mask_<role>.bin`): header
//!   `strata-masklet v1\n<role> <n> <h> <w>\n`, then per frame
//!   `ceil(h*w/8)` bytes, pixel `i` stored in byte `i/8` bit `i%8` (LSB
//!   first).
//! - **Instances** (`instances.bin`): header
//!   `strata-instances v1\n<n> <h> <w>\n`, then `n*h*w` little-endian u16.
//! - **Motion maps** (`*.mmap`): header
//!   `strata-motionmap v1\n<n> <d> <h> <w>\n`, then per frame `d` planes of
//!   `h*w` little-endian f32 followed by one coverage plane.
//! - **Latents** (`*.lat`): header `strata-latent v1\n<c> <t> <h> <w>\n`,
//!   then the tensor's row-major little-endian f32 data.
//! - **Clip metadata** (`clip.txt`): `strata-clip v1` then `key value`
//!   lines; object lines are `object <id> <role> <mean_depth>`.
//! - **Manifest** (`manifest.txt`): `strata-manifest v1`,
//!   `master_seed <u64>`, then `clip <name> seed <u64> split <train|held>`
//!   lines in generation order.

use crate::clip::{DepthClip, InstanceClip, LayerRole, Masklet, VideoClip};
use crate::error::{Result, VideoError};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use strata_core::Tensor;
use strata_geom::MotionFeatureMap;

// -- frames -----------------------------------------------------------------

pub fn frame_file(dir: &Path, t: usize) -> std::path::PathBuf {
    dir.join(format!("frame_{t:04}.png"))
}

pub fn write_frames(dir: &Path, clip: &VideoClip) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for t in 0..clip.frames {
        let img = image::RgbImage::from_raw(
            clip.width as u32,
            clip.height as u32,
            clip.frame(t).to_vec(),
        )
        .ok_or_else(|| VideoError::Image("frame buffer size".into()))?;
        img.save(frame_file(dir, t))
            .map_err(|e| VideoError::Image(e.to_string()))?;
    }
    Ok(())
}

pub fn read_frames(dir: &Path) -> Result<VideoClip> {
    let mut t = 0;
    let mut data = Vec::new();
    let (mut h, mut w) = (0usize, 0usize);
    loop {
        let path = frame_file(dir, t);
        if !path.exists() {
            break;
        }
        let img = image::open(&path)
            .map_err(|e| VideoError::Image(format!("{}: {e}", path.display())))?
            .into_rgb8();
        if t == 0 {
            h = img.height() as usize;
            w = img.width() as usize;
        } else if (img.height() as usize, img.width() as usize) != (h, w) {
            return Err(VideoError::Shape(format!("frame {t} extents differ")));
        }
        data.extend_from_slice(img.as_raw());
        t += 1;
    }
    if t == 0 {
        return Err(VideoError::Parse(format!("no frames in {}", dir.display())));
    }
    VideoClip::new(t, h, w, data)
}

// -- depth -------------------------------------------------------------------

pub fn write_depth(path: &Path, depth: &DepthClip) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "strata-depth v1\n{} {} {}\n", depth.frames, depth.height, depth.width)?;
    for v in &depth.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_depth(path: &Path) -> Result<DepthClip> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    expect_line(&mut r, "strata-depth v1")?;
    let dims = read_usize_line(&mut r, 3)?;
    let (n, h, w) = (dims[0], dims[1], dims[2]);
    let mut data = vec![0f32; n * h * w];
    read_f32_slice(&mut r, &mut data)?;
    Ok(DepthClip {
        frames: n,
        height: h,
        width: w,
        data,
    })
}

// -- masklets ----------------------------------------------------------------

pub fn masklet_file(dir: &Path, role: LayerRole) -> std::path::PathBuf {
    dir.join(format!("mask_{}.bin", role.as_str()))
}

pub fn write_masklet(path: &Path, m: &Masklet) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(
        w,
        "strata-masklet v1\n{} {} {} {}\n",
        m.role.as_str(),
        m.frames,
        m.height,
        m.width
    )?;
    let frame_px = m.height * m.width;
    let frame_bytes = frame_px.div_ceil(8);
    for t in 0..m.frames {
        let f = m.frame(t);
        let mut packed = vec![0u8; frame_bytes];
        for (i, &v) in f.iter().enumerate() {
            if v == 1 {
                packed[i / 8] |= 1 << (i % 8);
            }
        }
        w.write_all(&packed)?;
    }
    Ok(())
}

pub fn read_masklet(path: &Path) -> Result<Masklet> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    expect_line(&mut r, "strata-masklet v1")?;
    let meta = read_line(&mut r)?;
    let mut it = meta.split_whitespace();
    let role = LayerRole::parse(it.next().ok_or_else(|| VideoError::Parse("masklet: missing role".into()))?)?;
    let rest: Vec<usize> = it
        .map(|t| t.parse().map_err(|_| VideoError::Parse("masklet: bad dim".into())))
        .collect::<Result<_>>()?;
    let [n, h, w] = rest[..] else {
        return Err(VideoError::Parse("masklet: need `role n h w`".into()));
    };
    let frame_px = h * w;
    let frame_bytes = frame_px.div_ceil(8);
    let mut m = Masklet::zeros(role, n, h, w);
    for t in 0..n {
        let mut packed = vec![0u8; frame_bytes];
        r.read_exact(&mut packed)?;
        let f = m.frame_mut(t);
        for i in 0..frame_px {
            f[i] = (packed[i / 8] >> (i % 8)) & 1;
        }
    }
    Ok(m)
}

// -- instances ----------------------------------------------------------------

pub fn write_instances(path: &Path, inst: &InstanceClip) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "strata-instances v1\n{} {} {}\n", inst.frames, inst.height, inst.width)?;
    for &id in &inst.ids {
        w.write_all(&id.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_instances(path: &Path) -> Result<InstanceClip> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    expect_line(&mut r, "strata-instances v1")?;
    let dims = read_usize_line(&mut r, 3)?;
    let (n, h, w) = (dims[0], dims[1], dims[2]);
    let mut bytes = vec![0u8; n * h * w * 2];
    r.read_exact(&mut bytes)?;
    let ids = bytes
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    Ok(InstanceClip {
        frames: n,
        height: h,
        width: w,
        ids,
    })
}

// -- motion feature maps -------------------------------------------------------

pub fn write_motion_maps(path: &Path, maps: &[MotionFeatureMap<f64>]) -> Result<()> {
    let first = maps
        .first()
        .ok_or_else(|| VideoError::Parse("motionmap: empty sequence".into()))?;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(
        w,
        "strata-motionmap v1\n{} {} {} {}\n",
        maps.len(),
        first.dim,
        first.height,
        first.width
    )?;
    for m in maps {
        for &v in &m.data {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        for &v in &m.coverage {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_motion_maps(path: &Path) -> Result<Vec<MotionFeatureMap<f64>>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    expect_line(&mut r, "strata-motionmap v1")?;
    let dims = read_usize_line(&mut r, 4)?;
    let (n, d, h, w) = (dims[0], dims[1], dims[2], dims[3]);
    let hw = h * w;
    let mut maps = Vec::with_capacity(n);
    for _ in 0..n {
        let mut data = vec![0f32; d * hw];
        read_f32_slice(&mut r, &mut data)?;
        let mut coverage = vec![0f32; hw];
        read_f32_slice(&mut r, &mut coverage)?;
        maps.push(MotionFeatureMap {
            width: w,
            height: h,
            dim: d,
            data: data.into_iter().map(|v| v as f64).collect(),
            coverage: coverage.into_iter().map(|v| v as f64).collect(),
        });
    }
    Ok(maps)
}

// -- latent tensors -------------------------------------------------------------

pub fn write_latent(path: &Path, t: &Tensor<f32>) -> Result<()> {
    let s = t.shape();
    if s.len() != 4 {
        return Err(VideoError::Shape(format!("latent tensors are rank-4, got {s:?}")));
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "strata-latent v1\n{} {} {} {}\n", s[0], s[1], s[2], s[3])?;
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_latent(path: &Path) -> Result<Tensor<f32>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    expect_line(&mut r, "strata-latent v1")?;
    let dims = read_usize_line(&mut r, 4)?;
    let mut data = vec![0f32; dims.iter().product()];
    read_f32_slice(&mut r, &mut data)?;
    Tensor::new(&dims, data).map_err(|e| VideoError::Parse(e.to_string()))
}

// -- clip metadata -----------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct ClipMeta {
    pub seed: u64,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub human_id: u16,
    /// Ground-truth layer labels: `(instance id, role, clip-mean depth)`.
    pub objects: Vec<(u16, LayerRole, f64)>,
}

pub fn write_clip_meta(path: &Path, meta: &ClipMeta) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "strata-clip v1")?;
    writeln!(w, "seed {}", meta.seed)?;
    writeln!(w, "frames {}", meta.frames)?;
    writeln!(w, "height {}", meta.height)?;
    writeln!(w, "width {}", meta.width)?;
    writeln!(w, "human_id {}", meta.human_id)?;
    for (id, role, depth) in &meta.objects {
        writeln!(w, "object {} {} {}", id, role.as_str(), depth)?;
    }
    Ok(())
}

pub fn read_clip_meta(path: &Path) -> Result<ClipMeta> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    expect_line(&mut r, "strata-clip v1")?;
    let mut meta = ClipMeta {
        seed: 0,
        frames: 0,
        height: 0,
        width: 0,
        human_id: 0,
        objects: Vec::new(),
    };
    for line in r.lines() {
        let line = line?;
        let mut it = line.split_whitespace();
        let Some(key) = it.next() else { continue };
        let parse_err = |what: &str| VideoError::Parse(format!("clip meta: bad {what}: `{line}`"));
        match key {
            "seed" => meta.seed = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("seed"))?,
            "frames" => meta.frames = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("frames"))?,
            "height" => meta.height = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("height"))?,
            "width" => meta.width = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("width"))?,
            "human_id" => meta.human_id = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("human_id"))?,
            "object" => {
                let id: u16 = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("object id"))?;
                let role = LayerRole::parse(it.next().ok_or_else(|| parse_err("object role"))?)?;
                let depth: f64 = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| parse_err("object depth"))?;
                meta.objects.push((id, role, depth));
            }
            _ => return Err(parse_err("key")),
        }
    }
    Ok(meta)
}

// -- manifest ------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Held,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Held => "held",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub name: String,
    pub seed: u64,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub master_seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn train(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.split == Split::Train)
    }

    pub fn held(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.split == Split::Held)
    }
}

pub fn write_manifest(path: &Path, m: &Manifest) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "strata-manifest v1")?;
    writeln!(w, "master_seed {}", m.master_seed)?;
    for e in &m.entries {
        writeln!(w, "clip {} seed {} split {}", e.name, e.seed, e.split.as_str())?;
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    expect_line(&mut r, "strata-manifest v1")?;
    let seed_line = read_line(&mut r)?;
    let master_seed = seed_line
        .strip_prefix("master_seed ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| VideoError::Parse("manifest: bad master_seed".into()))?;
    let mut entries = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let ["clip", name, "seed", seed, "split", split] = parts[..] else {
            return Err(VideoError::Parse(format!("manifest: bad line `{line}`")));
        };
        entries.push(ManifestEntry {
            name: name.to_string(),
            seed: seed.parse().map_err(|_| VideoError::Parse("manifest: bad seed".into()))?,
            split: match split {
                "train" => Split::Train,
                "held" => Split::Held,
                other => return Err(VideoError::Parse(format!("manifest: bad split `{other}`"))),
            },
        });
    }
    Ok(Manifest {
        master_seed,
        entries,
    })
}

// -- helpers ---------------------------------------------------------------------

fn read_line<R: BufRead>(r: &mut R) -> Result<String> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(VideoError::Parse("unexpected end of file".into()));
    }
    Ok(line.trim_end_matches('\n').to_string())
}

fn expect_line<R: BufRead>(r: &mut R, expected: &str) -> Result<()> {
    let line = read_line(r)?;
    if line.trim() != expected {
        return Err(VideoError::Parse(format!(
            "bad header: expected `{expected}`, got `{line}`"
        )));
    }
    Ok(())
}

fn read_usize_line<R: BufRead>(r: &mut R, count: usize) -> Result<Vec<usize>> {
    let line = read_line(r)?;
    let vals: Vec<usize> = line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| VideoError::Parse(format!("bad dimension `{t}`"))))
        .collect::<Result<_>>()?;
    if vals.len() != count {
        return Err(VideoError::Parse(format!(
            "expected {count} dimensions, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn read_f32_slice<R: Read>(r: &mut R, out: &mut [f32]) -> Result<()> {
    let mut bytes = vec![0u8; out.len() * 4];
    r.read_exact(&mut bytes)?;
    for (o, c) in out.iter_mut().zip(bytes.chunks_exact(4)) {
        *o = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_masklet_instances_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let depth = DepthClip {
            frames: 2,
            height: 3,
            width: 5,
            data: (0..30).map(|i| i as f32 * 0.25 + 1.0).collect(),
        };
        write_depth(&dir.path().join("d.bin"), &depth).unwrap();
        assert_eq!(read_depth(&dir.path().join("d.bin")).unwrap(), depth);

        let mut m = Masklet::zeros(LayerRole::Occlusion, 2, 3, 5);
        for i in (0..30).step_by(3) {
            m.data[i] = 1;
        }
        write_masklet(&dir.path().join("m.bin"), &m).unwrap();
        assert_eq!(read_masklet(&dir.path().join("m.bin")).unwrap(), m);

        let mut inst = InstanceClip::empty(2, 3, 5);
        inst.ids[7] = 3;
        inst.ids[21] = 900;
        write_instances(&dir.path().join("i.bin"), &inst).unwrap();
        assert_eq!(read_instances(&dir.path().join("i.bin")).unwrap(), inst);
    }

    #[test]
    fn frames_roundtrip_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let mut clip = VideoClip::black(3, 6, 4);
        clip.data
            .iter_mut()
            .enumerate()
            .for_each(|(i, b)| *b = (i * 13 % 256) as u8);
        write_frames(&dir.path().join("frames"), &clip).unwrap();
        let back = read_frames(&dir.path().join("frames")).unwrap();
        assert_eq!(back, clip);
    }

    #[test]
    fn meta_and_manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let meta = ClipMeta {
            seed: 99,
            frames: 8,
            height: 64,
            width: 64,
            human_id: 1,
            objects: vec![(2, LayerRole::Occlusion, 1.5), (3, LayerRole::Scene, 9.25)],
        };
        write_clip_meta(&dir.path().join("clip.txt"), &meta).unwrap();
        assert_eq!(read_clip_meta(&dir.path().join("clip.txt")).unwrap(), meta);

        let manifest = Manifest {
            master_seed: 42,
            entries: vec![
                ManifestEntry {
                    name: "clip_00000".into(),
                    seed: 7,
                    split: Split::Train,
                },
                ManifestEntry {
                    name: "clip_00001".into(),
                    seed: 8,
                    split: Split::Held,
                },
            ],
        };
        write_manifest(&dir.path().join("manifest.txt"), &manifest).unwrap();
        assert_eq!(read_manifest(&dir.path().join("manifest.txt")).unwrap(), manifest);
    }

    #[test]
    fn latent_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let t = Tensor::<f32>::from_fn(&[2, 3, 4, 5], |i| i as f32 * 0.5 - 3.0);
        write_latent(&dir.path().join("z.lat"), &t).unwrap();
        assert_eq!(read_latent(&dir.path().join("z.lat")).unwrap(), t);
    }
}
