//! Corpus generation: one directory per clip with frames, depth, instances,
//! poses, cameras, metadata, and auxiliary ground truth for held-out clips.
//!
//! Layout per clip `clip_<index>/`:
//! ```text
//! frames/frame_0000.png ...   rendered RGB
//! depth.bin                   ground-truth depth planes
//! instances.bin               ground-truth instance ids
//! pose.txt / camera.txt       per-frame pose and camera tracks
//! clip.txt                    metadata incl. ground-truth layer labels
//! human_full.bin              unoccluded character coverage masklet
//! canonical_gt.png            direct A-pose render (RGBA)
//! solo/frame_0000.png ...     character-only render (held-out clips only)
//! ```
//! Held-out clips additionally get a sibling `clip_<index>_alt/` rendered
//! from the identical spec with a different character palette, for identity
//! swap probes.

use crate::error::{Result, SynthError};
use crate::render::{render_clip, GroundTruth};
use crate::spec::{sample_spec, with_alternate_palette, SceneSpec, SpecDistribution};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use strata_core::rng::derive_seed;
use strata_geom::{camera::write_camera_track, pose::write_pose_track};
use strata_video::clip::VideoClip;
use strata_video::formats::{
    write_clip_meta, write_depth, write_frames, write_instances, write_manifest, write_masklet,
    Manifest, ManifestEntry, Split,
};

pub fn clip_name(index: usize) -> String {
    format!("clip_{index:05}")
}

pub fn clip_dir(root: &Path, index: usize) -> PathBuf {
    root.join(clip_name(index))
}

/// Write one rendered clip to `dir`.
pub fn write_clip(dir: &Path, video: &VideoClip, gt: &GroundTruth) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_frames(&dir.join("frames"), video)?;
    write_depth(&dir.join("depth.bin"), &gt.depth)?;
    write_instances(&dir.join("instances.bin"), &gt.instances)?;
    write_clip_meta(&dir.join("clip.txt"), &gt.meta)?;
    write_masklet(&dir.join("human_full.bin"), &gt.human_full)?;
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("pose.txt"))?);
        write_pose_track(&mut f, &gt.poses)?;
    }
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("camera.txt"))?);
        write_camera_track(&mut f, &gt.cameras)?;
    }
    save_canonical_png(&dir.join("canonical_gt.png"), &gt.canonical)?;
    if let Some(solo) = &gt.human_solo {
        write_frames(&dir.join("solo"), solo)?;
    }
    Ok(())
}

pub fn save_canonical_png(path: &Path, img: &strata_geom::CanonicalImage<f64>) -> Result<()> {
    let (w, h) = (img.width, img.height);
    let hw = w * h;
    let mut data = vec![0u8; hw * 4];
    for i in 0..hw {
        for c in 0..4 {
            data[i * 4 + c] = (img.rgba[c * hw + i].clamp(0.0, 1.0) * 255.0).round() as u8;
        }
    }
    let im = image::RgbaImage::from_raw(w as u32, h as u32, data)
        .ok_or_else(|| SynthError::Image("canonical buffer size".into()))?;
    im.save(path).map_err(|e| SynthError::Image(e.to_string()))
}

pub fn load_canonical_png(path: &Path) -> Result<strata_geom::CanonicalImage<f64>> {
    let im = image::open(path)
        .map_err(|e| SynthError::Image(format!("{}: {e}", path.display())))?
        .into_rgba8();
    let (w, h) = (im.width() as usize, im.height() as usize);
    let hw = w * h;
    let mut rgba = vec![0f64; hw * 4];
    for (i, px) in im.pixels().enumerate() {
        for c in 0..4 {
            rgba[c * hw + i] = px.0[c] as f64 / 255.0;
        }
    }
    Ok(strata_geom::CanonicalImage {
        width: w,
        height: h,
        rgba,
    })
}

/// Generate `count` clips (the last `holdout` of them held out with
/// auxiliary ground truth and an alternate-palette sibling). Clips render in
/// parallel; all randomness derives from `(master_seed, clip index)`, so the
/// output is byte-identical regardless of scheduling.
pub fn generate_corpus(
    root: &Path,
    master_seed: u64,
    count: usize,
    holdout: usize,
    dist: &SpecDistribution,
) -> Result<Manifest> {
    std::fs::create_dir_all(root)?;
    let specs: Vec<(usize, SceneSpec)> = (0..count)
        .map(|i| {
            let seed = derive_seed(master_seed, "clip", i as u64);
            let mut spec = sample_spec(seed, dist);
            if i >= count.saturating_sub(holdout) {
                spec.emit_aux = true;
            }
            (i, spec)
        })
        .collect();

    let results: Vec<Result<()>> = specs
        .par_iter()
        .map(|(i, spec)| {
            let wrap = |e: SynthError| SynthError::Clip {
                index: *i,
                source: Box::new(e),
            };
            let (video, gt) = render_clip(spec).map_err(wrap)?;
            write_clip(&clip_dir(root, *i), &video, &gt).map_err(wrap)?;
            if spec.emit_aux {
                let alt = with_alternate_palette(spec, 1);
                let (video_a, gt_a) = render_clip(&alt).map_err(wrap)?;
                let alt_dir = root.join(format!("{}_alt", clip_name(*i)));
                write_clip(&alt_dir, &video_a, &gt_a).map_err(wrap)?;
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }

    let manifest = Manifest {
        master_seed,
        entries: specs
            .iter()
            .map(|(i, spec)| ManifestEntry {
                name: clip_name(*i),
                seed: spec.seed,
                split: if spec.emit_aux { Split::Held } else { Split::Train },
            })
            .collect(),
    };
    write_manifest(&root.join("manifest.txt"), &manifest)?;
    Ok(manifest)
}
