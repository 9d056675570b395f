//! Scene specifications and their sampling distribution. A spec's seed fully
//! determines the rendered clip.

use rand::Rng;
use strata_core::rng::seed_stream;
use strata_geom::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub enum Background {
    Checker {
        scale: f64,
        c1: [u8; 3],
        c2: [u8; 3],
    },
    Stripes {
        scale: f64,
        angle: f64,
        c1: [u8; 3],
        c2: [u8; 3],
    },
    Gradient {
        horizontal: bool,
        c1: [u8; 3],
        c2: [u8; 3],
    },
    Blobs {
        base: [u8; 3],
        blobs: Vec<([f64; 2], f64, [u8; 3])>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OccluderShape {
    Disc { radius: f64 },
    Bar { half_len: f64, half_width: f64, angle0: f64, spin: f64 },
}

/// A flat colored primitive on a fronto-parallel plane, on a parametric
/// trajectory (linear drift plus sinusoidal wobble).
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectSpec {
    pub shape: OccluderShape,
    pub color: [u8; 3],
    pub depth: f64,
    pub center: [f64; 2],
    pub velocity: [f64; 2],
    pub wobble_amp: [f64; 2],
    pub wobble_freq: f64,
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MotionKind {
    Still,
    Walk { swing: f64, freq: f64, phase: f64 },
    Wave { lift: f64, freq: f64, phase: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterSpec {
    /// Drives the per-part color palette.
    pub palette_seed: u64,
    /// Root translation placing the rig in the scene (metres; z is depth).
    pub position: Vec3<f64>,
    pub motion: MotionKind,
    /// Per-axis body scale (the rig's simplified shape parameter).
    pub scale: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraPath {
    /// World position at t = 0.
    pub position: Vec3<f64>,
    /// World-units-per-frame translation (parallax source).
    pub velocity: Vec3<f64>,
    pub focal: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub background: Background,
    pub background_depth: f64,
    pub objects: Vec<ObjectSpec>,
    pub character: CharacterSpec,
    pub camera: CameraPath,
    /// Emit auxiliary ground truth (character-only render, unoccluded human
    /// mask) used by evaluation probes.
    pub emit_aux: bool,
}

/// Distribution parameters for corpus sampling.
#[derive(Clone, Debug)]
pub struct SpecDistribution {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub objects_min: usize,
    pub objects_max: usize,
    /// Probability that a sampled object sits in front of the character.
    pub occluder_prob: f64,
    /// Probability of a translating (rather than static) camera.
    pub camera_move_prob: f64,
}

impl Default for SpecDistribution {
    fn default() -> Self {
        Self {
            frames: 8,
            width: 128,
            height: 128,
            objects_min: 1,
            objects_max: 3,
            occluder_prob: 0.5,
            camera_move_prob: 0.6,
        }
    }
}

fn random_color(rng: &mut impl Rng) -> [u8; 3] {
    // Saturated-ish colors away from black so layers are distinguishable.
    [
        rng.gen_range(40..=255),
        rng.gen_range(40..=255),
        rng.gen_range(40..=255),
    ]
}

/// Sample a scene spec; `seed` fully determines the result.
pub fn sample_spec(seed: u64, dist: &SpecDistribution) -> SceneSpec {
    let mut rng = seed_stream(seed, "scene-spec", 0);

    let char_depth = rng.gen_range(2.8..4.2);
    let bg_depth = rng.gen_range(8.0..12.0);
    let char_x = rng.gen_range(-0.35..0.35);
    let char_y_center = 0.95; // rig mid-height

    let background = match rng.gen_range(0..4) {
        0 => Background::Checker {
            scale: rng.gen_range(0.6..1.6),
            c1: random_color(&mut rng),
            c2: random_color(&mut rng),
        },
        1 => Background::Stripes {
            scale: rng.gen_range(0.5..1.4),
            angle: rng.gen_range(0.0..std::f64::consts::PI),
            c1: random_color(&mut rng),
            c2: random_color(&mut rng),
        },
        2 => Background::Gradient {
            horizontal: rng.gen_bool(0.5),
            c1: random_color(&mut rng),
            c2: random_color(&mut rng),
        },
        _ => {
            let base = random_color(&mut rng);
            let blobs = (0..rng.gen_range(3..7))
                .map(|_| {
                    (
                        [rng.gen_range(-6.0..6.0), rng.gen_range(-4.0..6.0)],
                        rng.gen_range(0.8..2.5),
                        random_color(&mut rng),
                    )
                })
                .collect();
            Background::Blobs { base, blobs }
        }
    };

    let n_objects = rng.gen_range(dist.objects_min..=dist.objects_max);
    let objects = (0..n_objects)
        .map(|_| {
            let front = rng.gen_bool(dist.occluder_prob);
            let depth = if front {
                rng.gen_range(1.2..char_depth - 0.9)
            } else {
                rng.gen_range(char_depth + 0.9..bg_depth - 1.0)
            };
            // Place near the character's line of sight so front objects
            // actually occlude; scale world offsets with depth.
            let k = depth / char_depth;
            let cx = (char_x + rng.gen_range(-0.5..0.5)) * k;
            let cy = (char_y_center + rng.gen_range(-0.7..0.7)) * k;
            let shape = if rng.gen_bool(0.5) {
                OccluderShape::Disc {
                    radius: rng.gen_range(0.12..0.4) * k,
                }
            } else {
                OccluderShape::Bar {
                    half_len: rng.gen_range(0.25..0.7) * k,
                    half_width: rng.gen_range(0.05..0.16) * k,
                    angle0: rng.gen_range(0.0..std::f64::consts::PI),
                    spin: rng.gen_range(-0.08..0.08),
                }
            };
            ObjectSpec {
                shape,
                color: random_color(&mut rng),
                depth,
                center: [cx, cy],
                velocity: [rng.gen_range(-0.06..0.06), rng.gen_range(-0.04..0.04)],
                wobble_amp: [rng.gen_range(0.0..0.08), rng.gen_range(0.0..0.08)],
                wobble_freq: rng.gen_range(0.2..0.9),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            }
        })
        .collect();

    let motion = match rng.gen_range(0..5) {
        0 => MotionKind::Still,
        1 | 2 => MotionKind::Walk {
            swing: rng.gen_range(0.3..0.65),
            freq: rng.gen_range(0.08..0.2),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        },
        _ => MotionKind::Wave {
            lift: rng.gen_range(1.6..2.2),
            freq: rng.gen_range(0.1..0.3),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        },
    };

    let velocity = if rng.gen_bool(dist.camera_move_prob) {
        Vec3::new(
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.02..0.02),
            rng.gen_range(-0.01..0.03),
        )
    } else {
        Vec3::zero()
    };

    SceneSpec {
        seed,
        frames: dist.frames,
        width: dist.width,
        height: dist.height,
        background,
        background_depth: bg_depth,
        objects,
        character: CharacterSpec {
            palette_seed: rng.gen(),
            position: Vec3::new(char_x, 0.0, char_depth),
            motion,
            scale: [
                rng.gen_range(0.92..1.08),
                rng.gen_range(0.92..1.08),
                rng.gen_range(0.92..1.08),
            ],
        },
        camera: CameraPath {
            position: Vec3::new(0.0, rng.gen_range(0.8..1.1), 0.0),
            velocity,
            focal: rng.gen_range(0.95..1.25) * dist.height as f64,
        },
        emit_aux: false,
    }
}

/// The same scene with a different character palette; everything else
/// (motion, scene, camera, occluders) is bit-identical. Used for identity
/// swap probes.
pub fn with_alternate_palette(spec: &SceneSpec, salt: u64) -> SceneSpec {
    let mut out = spec.clone();
    out.character.palette_seed = strata_core::rng::derive_seed(spec.character.palette_seed, "alt-palette", salt);
    out
}
