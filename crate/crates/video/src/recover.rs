//! Deterministic scene recovery: hole filling by a multi-scale push-pull
//! pass refined with Gauss-Seidel relaxation toward the harmonic fill.
//! Known pixels are never touched; constant regions fill exactly; linear
//! gradients are reproduced to within a few percent.

use crate::clip::{Masklet, VideoClip};
use crate::error::{Result, VideoError};
use rayon::prelude::*;

const MAX_SWEEPS: usize = 256;
const SWEEP_STOP_DELTA: f32 = 0.005;

/// Fill everything outside the scene masklet from surrounding scene pixels.
/// A frame with no scene pixels at all is filled with the clip-mean scene
/// color (mid-gray if the whole clip has none).
pub fn recover_scene(scene: &VideoClip, scene_mask: &Masklet) -> Result<VideoClip> {
    if (scene.frames, scene.height, scene.width)
        != (scene_mask.frames, scene_mask.height, scene_mask.width)
    {
        return Err(VideoError::Shape("scene mask extents differ from clip".into()));
    }
    let (h, w) = (scene.height, scene.width);

    // Clip-mean color over known scene pixels, the degenerate-frame filler.
    let mut sums = [0f64; 3];
    let mut count = 0u64;
    for (i, &m) in scene_mask.data.iter().enumerate() {
        if m == 1 {
            for c in 0..3 {
                sums[c] += scene.data[i * 3 + c] as f64;
            }
            count += 1;
        }
    }
    let clip_mean: [u8; 3] = if count == 0 {
        [128; 3]
    } else {
        [
            (sums[0] / count as f64).round() as u8,
            (sums[1] / count as f64).round() as u8,
            (sums[2] / count as f64).round() as u8,
        ]
    };

    let mut out = scene.clone();
    let frame_px = h * w;
    let frames: Vec<(usize, Vec<u8>)> = (0..scene.frames)
        .into_par_iter()
        .map(|t| {
            let mask = scene_mask.frame(t);
            let src = scene.frame(t);
            let mut frame = src.to_vec();
            if mask.iter().all(|&m| m == 0) {
                for px in frame.chunks_mut(3) {
                    px.copy_from_slice(&clip_mean);
                }
                return (t, frame);
            }
            if mask.iter().all(|&m| m == 1) {
                return (t, frame); // hole-free: identity
            }
            for c in 0..3 {
                let mut grid = vec![0f32; frame_px];
                for i in 0..frame_px {
                    grid[i] = src[i * 3 + c] as f32;
                }
                fill_channel(&mut grid, mask, h, w);
                for i in 0..frame_px {
                    if mask[i] == 0 {
                        frame[i * 3 + c] = grid[i].clamp(0.0, 255.0).round() as u8;
                    }
                }
            }
            (t, frame)
        })
        .collect();
    for (t, frame) in frames {
        out.frame_mut(t).copy_from_slice(&frame);
    }
    Ok(out)
}

fn fill_channel(grid: &mut [f32], mask: &[u8], h: usize, w: usize) {
    push_pull_init(grid, mask, h, w);
    relax(grid, mask, h, w);
}

/// Initialize unknown pixels from a known-weighted mip pyramid.
fn push_pull_init(grid: &mut [f32], mask: &[u8], h: usize, w: usize) {
    // Pull: build coarser levels of (weighted value, weight).
    let mut levels: Vec<(Vec<f32>, Vec<f32>, usize, usize)> = Vec::new();
    {
        let v: Vec<f32> = grid
            .iter()
            .zip(mask)
            .map(|(&g, &m)| if m == 1 { g } else { 0.0 })
            .collect();
        let wt: Vec<f32> = mask.iter().map(|&m| m as f32).collect();
        levels.push((v, wt, h, w));
    }
    while levels.last().unwrap().2 > 1 || levels.last().unwrap().3 > 1 {
        let (pv, pw, ph, pw_) = levels.last().unwrap().clone();
        let (ch, cw) = (ph.div_ceil(2), pw_.div_ceil(2));
        let mut cv = vec![0f32; ch * cw];
        let mut cwt = vec![0f32; ch * cw];
        for y in 0..ch {
            for x in 0..cw {
                let mut val = 0f32;
                let mut wt = 0f32;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let (sy, sx) = (y * 2 + dy, x * 2 + dx);
                        if sy < ph && sx < pw_ {
                            val += pv[sy * pw_ + sx] * pw[sy * pw_ + sx];
                            wt += pw[sy * pw_ + sx];
                        }
                    }
                }
                if wt > 0.0 {
                    cv[y * cw + x] = val / wt;
                    cwt[y * cw + x] = 1.0;
                }
            }
        }
        levels.push((cv, cwt, ch, cw));
    }
    // Push: fill zero-weight cells from the coarser level (bilinear).
    for li in (0..levels.len() - 1).rev() {
        let (coarse_v, _, ch, cw) = levels[li + 1].clone();
        let (fv, fw, fh, fw_) = &mut levels[li];
        for y in 0..*fh {
            for x in 0..*fw_ {
                if fw[y * *fw_ + x] > 0.0 {
                    continue;
                }
                let gx = ((x as f32 + 0.5) / 2.0 - 0.5).clamp(0.0, (cw - 1) as f32);
                let gy = ((y as f32 + 0.5) / 2.0 - 0.5).clamp(0.0, (ch - 1) as f32);
                let (x0, y0) = (gx.floor() as usize, gy.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(cw - 1), (y0 + 1).min(ch - 1));
                let (fx, fy) = (gx - x0 as f32, gy - y0 as f32);
                let v = coarse_v[y0 * cw + x0] * (1.0 - fx) * (1.0 - fy)
                    + coarse_v[y0 * cw + x1] * fx * (1.0 - fy)
                    + coarse_v[y1 * cw + x0] * (1.0 - fx) * fy
                    + coarse_v[y1 * cw + x1] * fx * fy;
                fv[y * *fw_ + x] = v;
            }
        }
    }
    let (filled, _, _, _) = &levels[0];
    grid.copy_from_slice(filled);
}

/// Gauss-Seidel sweeps over hole pixels in raster order; converges toward
/// the harmonic interpolant, which reproduces constants and linear ramps.
fn relax(grid: &mut [f32], mask: &[u8], h: usize, w: usize) {
    for _ in 0..MAX_SWEEPS {
        let mut max_delta = 0f32;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if mask[i] == 1 {
                    continue;
                }
                let mut acc = 0f32;
                let mut cnt = 0f32;
                if y > 0 {
                    acc += grid[i - w];
                    cnt += 1.0;
                }
                if y + 1 < h {
                    acc += grid[i + w];
                    cnt += 1.0;
                }
                if x > 0 {
                    acc += grid[i - 1];
                    cnt += 1.0;
                }
                if x + 1 < w {
                    acc += grid[i + 1];
                    cnt += 1.0;
                }
                let v = acc / cnt;
                let d = (v - grid[i]).abs();
                if d > max_delta {
                    max_delta = d;
                }
                grid[i] = v;
            }
        }
        if max_delta < SWEEP_STOP_DELTA {
            break;
        }
    }
}
