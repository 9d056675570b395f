//! Partition and reconstruction invariants over randomized layered clips.

use proptest::prelude::*;
use strata_video::clip::{DepthClip, InstanceClip, LayeredClip, VideoClip};
use strata_video::{assign_layers, extract_components, validate_partition};

fn arb_layered_clip() -> impl Strategy<Value = LayeredClip> {
    // 2 frames of 12x12 with up to 4 objects as random rectangles (id 1 is
    // the human), random per-object depths, random video bytes.
    let rects = proptest::collection::vec(
        (1u16..=4, 0usize..8, 0usize..8, 1usize..5, 1usize..5, 0.5f32..9.5),
        1..5,
    );
    (rects, proptest::collection::vec(0u8..=255, 2 * 12 * 12 * 3)).prop_map(|(rects, bytes)| {
        let mut inst = InstanceClip::empty(2, 12, 12);
        let mut depth = DepthClip::filled(2, 12, 12, 50.0);
        let mut has_human = false;
        for t in 0..2 {
            for &(id, x0, y0, w, h, d) in &rects {
                if id == 1 {
                    has_human = true;
                }
                for y in y0..(y0 + h).min(12) {
                    for x in x0..(x0 + w).min(12) {
                        inst.frame_mut(t)[y * 12 + x] = id;
                        depth.frame_mut(t)[y * 12 + x] = d + id as f32;
                    }
                }
            }
        }
        if !has_human {
            // Guarantee a human instance somewhere.
            inst.frame_mut(0)[0] = 1;
            depth.frame_mut(0)[0] = 4.0;
        }
        LayeredClip {
            video: VideoClip::new(2, 12, 12, bytes).unwrap(),
            depth,
            instances: inst,
            human_id: 1,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The three masklets partition every pixel, and the Eq-style component
    /// sum reconstructs the source exactly in integer arithmetic.
    #[test]
    fn partition_and_reconstruction(clip in arb_layered_clip()) {
        let (mh, mo, ms, assign) = assign_layers(&clip).unwrap();
        validate_partition(&mh, &mo, &ms).unwrap();

        let (vh, vo, vs) = extract_components(&clip.video, &mh, &mo, &ms).unwrap();
        for i in 0..clip.video.data.len() {
            let sum = vh.data[i] as u16 + vo.data[i] as u16 + vs.data[i] as u16;
            prop_assert_eq!(sum, clip.video.data[i] as u16, "byte {}", i);
        }

        // Ordering soundness: every occluder mean strictly below the human's,
        // every scene object not below.
        for (id, role, mean) in &assign.objects {
            match role {
                strata_video::LayerRole::Occlusion =>
                    prop_assert!(*mean < assign.human_mean_depth, "object {}", id),
                strata_video::LayerRole::Scene =>
                    prop_assert!(*mean >= assign.human_mean_depth, "object {}", id),
                strata_video::LayerRole::Human => unreachable!(),
            }
        }
    }
}
