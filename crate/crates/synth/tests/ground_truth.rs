//! Ground-truth guarantees of the synthetic renderer.

use strata_synth::{
    generate_corpus, render_clip, sample_spec, CameraPath, CharacterSpec, MotionKind, ObjectSpec,
    OccluderShape, SceneSpec, SpecDistribution,
};
use strata_video::clip::LayeredClip;

fn small_dist() -> SpecDistribution {
    SpecDistribution {
        frames: 4,
        width: 48,
        height: 48,
        ..SpecDistribution::default()
    }
}

#[test]
fn same_seed_renders_bit_identical_clips() {
    let spec = sample_spec(77, &small_dist());
    let (v1, g1) = render_clip(&spec).unwrap();
    let (v2, g2) = render_clip(&spec).unwrap();
    assert_eq!(v1, v2);
    assert_eq!(g1.depth, g2.depth);
    assert_eq!(g1.instances, g2.instances);
    assert_eq!(g1.meta, g2.meta);
}

#[test]
fn static_scene_with_no_objects_repeats_the_first_frame() {
    let dist = small_dist();
    let spec = SceneSpec {
        objects: vec![],
        character: CharacterSpec {
            motion: MotionKind::Still,
            ..sample_spec(3, &dist).character
        },
        camera: CameraPath {
            velocity: strata_geom::Vec3::zero(),
            ..sample_spec(3, &dist).camera
        },
        ..sample_spec(3, &dist)
    };
    let (video, gt) = render_clip(&spec).unwrap();
    for t in 1..video.frames {
        assert_eq!(video.frame(t), video.frame(0));
        assert_eq!(gt.instances.frame(t), gt.instances.frame(0));
    }
    assert!(gt.meta.objects.is_empty());
    assert!(gt.instances.ids.iter().all(|&id| id <= 1));
}

#[test]
fn occluder_paints_over_the_character_exactly_where_masks_overlap() {
    let dist = small_dist();
    let base = sample_spec(11, &dist);
    let spec = SceneSpec {
        objects: vec![ObjectSpec {
            shape: OccluderShape::Disc { radius: 0.25 },
            color: [250, 10, 10],
            depth: 1.5,
            // In front of the character's torso.
            center: [
                base.character.position.x * 1.5 / base.character.position.z,
                1.0 * 1.5 / base.character.position.z,
            ],
            velocity: [0.0, 0.0],
            wobble_amp: [0.0, 0.0],
            wobble_freq: 0.0,
            phase: 0.0,
        }],
        character: CharacterSpec {
            motion: MotionKind::Still,
            ..base.character.clone()
        },
        ..base
    };
    let (video, gt) = render_clip(&spec).unwrap();
    let mut overlap = 0;
    for t in 0..video.frames {
        let inst = gt.instances.frame(t);
        let full = gt.human_full.frame(t);
        for (i, (&id, &hf)) in inst.iter().zip(full).enumerate() {
            if id == 2 && hf == 1 {
                overlap += 1;
                let (y, x) = (i / video.width, i % video.width);
                assert_eq!(video.pixel(t, y, x), [250, 10, 10], "occluder color exact");
            }
        }
    }
    assert!(overlap > 20, "the disc should actually occlude ({overlap} px)");
}

#[test]
fn layer_labels_are_reproduced_by_the_decomposition_rule() {
    for seed in 0..12u64 {
        let spec = sample_spec(1000 + seed, &small_dist());
        let (video, gt) = render_clip(&spec).unwrap();
        let layered = LayeredClip {
            video,
            depth: gt.depth.clone(),
            instances: gt.instances.clone(),
            human_id: gt.meta.human_id,
        };
        let (_, _, _, assignment) = strata_video::assign_layers(&layered).unwrap();
        assert_eq!(assignment.objects, gt.meta.objects, "seed {seed}");
    }
}

#[test]
fn depth_is_positive_and_character_depths_match_projected_vertices() {
    let spec = sample_spec(5, &small_dist());
    let (_, gt) = render_clip(&spec).unwrap();
    assert!(gt.depth.data.iter().all(|&d| d > 0.0));

    let mut rig = strata_geom::default_rig::<f64>();
    rig.shape_scale = strata_geom::Vec3::new(
        spec.character.scale[0],
        spec.character.scale[1],
        spec.character.scale[2],
    );
    for t in 0..spec.frames {
        let posed = strata_geom::pose_vertices(&rig, &gt.poses[t]).unwrap();
        let cam = &gt.cameras[t];
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for &p in &posed {
            let pr = cam.project(p);
            if pr.valid {
                lo = lo.min(pr.depth);
                hi = hi.max(pr.depth);
            }
        }
        for (i, &id) in gt.instances.frame(t).iter().enumerate() {
            if id == gt.meta.human_id {
                let d = gt.depth.frame(t)[i] as f64;
                assert!(
                    d >= lo - 1e-3 && d <= hi + 1e-3,
                    "frame {t} pixel {i}: depth {d} outside [{lo}, {hi}]"
                );
            }
        }
    }
}

#[test]
fn corpus_single_clip_writes_manifest_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_corpus(dir.path(), 9, 1, 0, &small_dist()).unwrap();
    assert_eq!(manifest.entries.len(), 1);
    let clip = dir.path().join("clip_00000");
    for f in [
        "frames/frame_0000.png",
        "depth.bin",
        "instances.bin",
        "pose.txt",
        "camera.txt",
        "clip.txt",
        "human_full.bin",
        "canonical_gt.png",
    ] {
        assert!(clip.join(f).exists(), "{f} missing");
    }
    assert!(dir.path().join("manifest.txt").exists());
}

fn dir_digest(root: &std::path::Path) -> Vec<(String, u64)> {
    fn fnv(bytes: &[u8]) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<_> = std::fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fnv(&std::fs::read(&p).unwrap())));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn fixed_master_seed_reproduces_the_corpus_byte_for_byte() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let dist = small_dist();
    generate_corpus(d1.path(), 123, 3, 1, &dist).unwrap();
    generate_corpus(d2.path(), 123, 3, 1, &dist).unwrap();
    assert_eq!(dir_digest(d1.path()), dir_digest(d2.path()));
}

#[test]
fn layer_distribution_matches_the_sampler_within_chi_square_noise() {
    // The spec sampler places each object in front of the character with
    // probability p; over many sampled specs the front/back counts must pass
    // a one-degree chi-square test at p > 0.01 (|z| < 2.576).
    let dist = SpecDistribution::default();
    let mut front = 0u64;
    let mut total = 0u64;
    for seed in 0..400u64 {
        let spec = sample_spec(50_000 + seed, &dist);
        for o in &spec.objects {
            total += 1;
            if o.depth < spec.character.position.z {
                front += 1;
            }
        }
    }
    let p = dist.occluder_prob;
    let expect = total as f64 * p;
    let sigma = (total as f64 * p * (1.0 - p)).sqrt();
    let z = (front as f64 - expect) / sigma;
    assert!(
        z.abs() < 2.576,
        "front {front}/{total}, z = {z:.3} (chi-square p < 0.01)"
    );
}
