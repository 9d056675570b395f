//! Hierarchical spatial layer decomposition: identity-consistent instance
//! tracking, depth-ordered layer assignment, and masked component
//! extraction.

use crate::clip::{InstanceClip, LayerRole, LayeredClip, Masklet, VideoClip};
use crate::error::{Result, VideoError};
use std::collections::HashMap;

pub const TRACK_IOU_THRESHOLD: f64 = 0.3;

/// Associate per-frame instance labels into clip-consistent identities by
/// greatest mask overlap between consecutive frames.
///
/// Rules (all deterministic):
/// - matches require IoU >= 0.3 against the identity's previous-frame mask;
/// - ties on IoU go to the current-frame mask with the lower centroid-x;
/// - unmatched previous identities retire and are never reused;
/// - unmatched current labels get fresh identities in ascending label order.
pub fn track_instances(per_frame: &InstanceClip) -> InstanceClip {
    let (n, h, w) = (per_frame.frames, per_frame.height, per_frame.width);
    let mut out = InstanceClip::empty(n, h, w);
    let mut next_id: u16 = 1;
    // Identity -> pixel set (as indices) in the previous frame.
    let mut active: Vec<(u16, Vec<usize>)> = Vec::new();

    for t in 0..n {
        let frame = per_frame.frame(t);
        // Gather current-frame label -> pixels, labels ascending.
        let mut by_label: HashMap<u16, Vec<usize>> = HashMap::new();
        for (i, &id) in frame.iter().enumerate() {
            if id != 0 {
                by_label.entry(id).or_default().push(i);
            }
        }
        let mut labels: Vec<u16> = by_label.keys().copied().collect();
        labels.sort_unstable();

        let centroid_x = |pixels: &[usize]| -> f64 {
            pixels.iter().map(|&i| (i % w) as f64).sum::<f64>() / pixels.len() as f64
        };

        // Candidate matches above the threshold.
        struct Cand {
            iou: f64,
            cx: f64,
            prev_idx: usize,
            label: u16,
        }
        let mut cands: Vec<Cand> = Vec::new();
        for (pi, (_, prev_pixels)) in active.iter().enumerate() {
            let prev_set: std::collections::HashSet<usize> = prev_pixels.iter().copied().collect();
            for &label in &labels {
                let cur = &by_label[&label];
                let inter = cur.iter().filter(|i| prev_set.contains(i)).count();
                if inter == 0 {
                    continue;
                }
                let union = prev_pixels.len() + cur.len() - inter;
                let iou = inter as f64 / union as f64;
                if iou >= TRACK_IOU_THRESHOLD {
                    cands.push(Cand {
                        iou,
                        cx: centroid_x(cur),
                        prev_idx: pi,
                        label,
                    });
                }
            }
        }
        cands.sort_by(|a, b| {
            b.iou
                .partial_cmp(&a.iou)
                .unwrap()
                .then(a.cx.partial_cmp(&b.cx).unwrap())
                .then(active[a.prev_idx].0.cmp(&active[b.prev_idx].0))
                .then(a.label.cmp(&b.label))
        });

        let mut matched_prev = vec![false; active.len()];
        let mut label_to_id: HashMap<u16, u16> = HashMap::new();
        for c in &cands {
            if matched_prev[c.prev_idx] || label_to_id.contains_key(&c.label) {
                continue;
            }
            matched_prev[c.prev_idx] = true;
            label_to_id.insert(c.label, active[c.prev_idx].0);
        }
        // Fresh identities for unmatched labels.
        for &label in &labels {
            if !label_to_id.contains_key(&label) {
                label_to_id.insert(label, next_id);
                next_id += 1;
            }
        }

        // Write the frame and restage active identities.
        let mut new_active: Vec<(u16, Vec<usize>)> = Vec::new();
        for &label in &labels {
            let id = label_to_id[&label];
            let pixels = &by_label[&label];
            for &i in pixels {
                out.frame_mut(t)[i] = id;
            }
            new_active.push((id, pixels.clone()));
        }
        new_active.sort_by_key(|(id, _)| *id);
        active = new_active;
    }
    out
}

/// Per-object layer decision with its evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerAssignment {
    pub human_id: u16,
    pub human_mean_depth: f64,
    /// `(instance id, role, clip-mean depth)` for every non-human object.
    pub objects: Vec<(u16, LayerRole, f64)>,
}

/// Depth-ordered layer assignment over a whole clip: objects whose clip-mean
/// depth is strictly smaller than the human's become occluders, everything
/// else (including depth ties) stays scene.
pub fn assign_layers(clip: &LayeredClip) -> Result<(Masklet, Masklet, Masklet, LayerAssignment)> {
    let inst = &clip.instances;
    let (n, h, w) = (inst.frames, inst.height, inst.width);
    if clip.depth.frames != n || clip.depth.height != h || clip.depth.width != w {
        return Err(VideoError::Shape("depth extents differ from instances".into()));
    }

    // Clip-mean depth per instance id.
    let mut sums: HashMap<u16, (f64, u64)> = HashMap::new();
    for (i, &id) in inst.ids.iter().enumerate() {
        if id != 0 {
            let e = sums.entry(id).or_insert((0.0, 0));
            e.0 += clip.depth.data[i] as f64;
            e.1 += 1;
        }
    }
    let human = sums
        .get(&clip.human_id)
        .ok_or(VideoError::NoHumanInstance(clip.human_id))?;
    let human_mean = human.0 / human.1 as f64;

    let mut objects: Vec<(u16, LayerRole, f64)> = sums
        .iter()
        .filter(|(id, _)| **id != clip.human_id)
        .map(|(&id, &(s, c))| {
            let mean = s / c as f64;
            let role = if mean < human_mean {
                LayerRole::Occlusion
            } else {
                LayerRole::Scene
            };
            (id, role, mean)
        })
        .collect();
    objects.sort_by_key(|(id, _, _)| *id);

    let occluders: std::collections::HashSet<u16> = objects
        .iter()
        .filter(|(_, role, _)| *role == LayerRole::Occlusion)
        .map(|(id, _, _)| *id)
        .collect();

    let mut mh = Masklet::zeros(LayerRole::Human, n, h, w);
    let mut mo = Masklet::zeros(LayerRole::Occlusion, n, h, w);
    let mut ms = Masklet::zeros(LayerRole::Scene, n, h, w);
    for (i, &id) in inst.ids.iter().enumerate() {
        if id == clip.human_id {
            mh.data[i] = 1;
        } else if occluders.contains(&id) {
            mo.data[i] = 1;
        } else {
            ms.data[i] = 1;
        }
    }

    Ok((
        mh,
        mo,
        ms,
        LayerAssignment {
            human_id: clip.human_id,
            human_mean_depth: human_mean,
            objects,
        },
    ))
}

/// Element-wise product of a clip with a binary masklet.
pub fn extract_component(video: &VideoClip, masklet: &Masklet) -> Result<VideoClip> {
    if (video.frames, video.height, video.width) != (masklet.frames, masklet.height, masklet.width)
    {
        return Err(VideoError::Shape("masklet extents differ from video".into()));
    }
    let mut out = video.clone();
    for (i, &m) in masklet.data.iter().enumerate() {
        if m == 0 {
            out.data[i * 3] = 0;
            out.data[i * 3 + 1] = 0;
            out.data[i * 3 + 2] = 0;
        }
    }
    Ok(out)
}

/// The three masked components `(v_h, v_o, v_s)`.
pub fn extract_components(
    video: &VideoClip,
    mh: &Masklet,
    mo: &Masklet,
    ms: &Masklet,
) -> Result<(VideoClip, VideoClip, VideoClip)> {
    Ok((
        extract_component(video, mh)?,
        extract_component(video, mo)?,
        extract_component(video, ms)?,
    ))
}

/// Check the partition invariant: the three masklets are pairwise disjoint
/// and cover every pixel.
pub fn validate_partition(mh: &Masklet, mo: &Masklet, ms: &Masklet) -> Result<()> {
    if !(mh.data.len() == mo.data.len() && mo.data.len() == ms.data.len()) {
        return Err(VideoError::Partition("extent mismatch".into()));
    }
    for i in 0..mh.data.len() {
        let sum = mh.data[i] + mo.data[i] + ms.data[i];
        if sum != 1 {
            return Err(VideoError::Partition(format!(
                "pixel {i}: h+o+s = {sum} (h={}, o={}, s={})",
                mh.data[i], mo.data[i], ms.data[i]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clip::DepthClip;

    fn rect_instances(n: usize, rects: &[(u16, usize, usize, usize, usize)]) -> InstanceClip {
        // rects: (id, x0, y0, w, h) static over frames
        let mut inst = InstanceClip::empty(n, 16, 16);
        for t in 0..n {
            for &(id, x0, y0, rw, rh) in rects {
                for y in y0..y0 + rh {
                    for x in x0..x0 + rw {
                        inst.frame_mut(t)[y * 16 + x] = id;
                    }
                }
            }
        }
        inst
    }

    #[test]
    fn static_objects_keep_identity_each_frame() {
        let inst = rect_instances(4, &[(7, 1, 1, 4, 4), (3, 9, 9, 5, 5)]);
        let tracked = track_instances(&inst);
        // Labels are renumbered by first appearance (ascending label order on
        // frame 0: 3 -> 1, 7 -> 2) and stay put.
        for t in 0..4 {
            assert_eq!(tracked.frame(t)[1 * 16 + 1], 2);
            assert_eq!(tracked.frame(t)[9 * 16 + 9], 1);
        }
    }

    #[test]
    fn teleporting_objects_retire_and_reissue() {
        // One object jumps across the frame with zero overlap: the identity
        // retires and a fresh id appears.
        let mut inst = InstanceClip::empty(2, 16, 16);
        for y in 0..3 {
            for x in 0..3 {
                inst.frame_mut(0)[y * 16 + x] = 5;
                inst.frame_mut(1)[(y + 12) * 16 + (x + 12)] = 5;
            }
        }
        let tracked = track_instances(&inst);
        assert_eq!(tracked.frame(0)[0], 1);
        assert_eq!(tracked.frame(1)[12 * 16 + 12], 2);
    }

    #[test]
    fn moderate_motion_keeps_identity() {
        // 6x6 square moving by 1 px/frame keeps IoU well above 0.3.
        let mut inst = InstanceClip::empty(5, 16, 16);
        for t in 0..5 {
            for y in 2..8 {
                for x in 2 + t..8 + t {
                    inst.frame_mut(t)[y * 16 + x] = 9;
                }
            }
        }
        let tracked = track_instances(&inst);
        for t in 0..5 {
            assert_eq!(tracked.frame(t)[2 * 16 + (2 + t + 2)], 1);
        }
    }

    fn layered(depths: &[(u16, f32)], human: u16) -> LayeredClip {
        let rects: Vec<(u16, usize, usize, usize, usize)> = depths
            .iter()
            .enumerate()
            .map(|(k, &(id, _))| (id, k * 5, 2, 4, 4))
            .collect();
        let inst = rect_instances(2, &rects);
        let mut depth = DepthClip::filled(2, 16, 16, 100.0);
        for (i, &id) in inst.ids.iter().enumerate() {
            if let Some(&(_, d)) = depths.iter().find(|&&(rid, _)| rid == id) {
                depth.data[i] = d;
            }
        }
        LayeredClip {
            video: VideoClip::black(2, 16, 16),
            depth,
            instances: inst,
            human_id: human,
        }
    }

    #[test]
    fn mean_depth_rule_assigns_layers() {
        // human at 5.0, A at 3.0 (occluder), B at 7.0 (scene)
        let clip = layered(&[(1, 5.0), (2, 3.0), (3, 7.0)], 1);
        let (_, _, _, assign) = assign_layers(&clip).unwrap();
        assert_eq!(assign.human_mean_depth, 5.0);
        assert_eq!(assign.objects[0], (2, LayerRole::Occlusion, 3.0));
        assert_eq!(assign.objects[1], (3, LayerRole::Scene, 7.0));
    }

    #[test]
    fn equal_mean_depth_goes_to_scene() {
        let clip = layered(&[(1, 5.0), (2, 5.0)], 1);
        let (_, mo, _, assign) = assign_layers(&clip).unwrap();
        assert_eq!(assign.objects[0].1, LayerRole::Scene);
        assert_eq!(mo.count_ones(), 0);
    }

    #[test]
    fn no_other_instances_gives_empty_occlusion_and_complement_scene() {
        let clip = layered(&[(1, 5.0)], 1);
        let (mh, mo, ms, _) = assign_layers(&clip).unwrap();
        assert_eq!(mo.count_ones(), 0);
        validate_partition(&mh, &mo, &ms).unwrap();
        assert_eq!(mh.count_ones() + ms.count_ones(), 2 * 16 * 16);
    }

    #[test]
    fn missing_human_is_an_error() {
        let clip = layered(&[(2, 3.0)], 1);
        assert!(matches!(
            assign_layers(&clip),
            Err(VideoError::NoHumanInstance(1))
        ));
    }

    #[test]
    fn extraction_is_elementwise() {
        // frame [[1,2],[3,4]] (gray), mask [[1,0],[0,1]] -> [[1,0],[0,4]]
        let mut v = VideoClip::black(1, 2, 2);
        for (i, val) in [1u8, 2, 3, 4].iter().enumerate() {
            v.data[i * 3] = *val;
            v.data[i * 3 + 1] = *val;
            v.data[i * 3 + 2] = *val;
        }
        let mut m = Masklet::zeros(LayerRole::Human, 1, 2, 2);
        m.data[0] = 1;
        m.data[3] = 1;
        let out = extract_component(&v, &m).unwrap();
        assert_eq!(out.pixel(0, 0, 0), [1, 1, 1]);
        assert_eq!(out.pixel(0, 0, 1), [0, 0, 0]);
        assert_eq!(out.pixel(0, 1, 0), [0, 0, 0]);
        assert_eq!(out.pixel(0, 1, 1), [4, 4, 4]);
    }

    #[test]
    fn all_ones_and_all_zeros_masks() {
        let v = {
            let mut v = VideoClip::black(1, 4, 4);
            v.data.iter_mut().enumerate().for_each(|(i, b)| *b = (i % 251) as u8);
            v
        };
        let mut ones = Masklet::zeros(LayerRole::Scene, 1, 4, 4);
        ones.data.fill(1);
        let zeros = Masklet::zeros(LayerRole::Scene, 1, 4, 4);
        assert_eq!(extract_component(&v, &ones).unwrap(), v);
        assert!(extract_component(&v, &zeros).unwrap().data.iter().all(|&b| b == 0));
    }
}
