//! Procedural 2.5D scene and corpus generator: character clips with exact
//! ground truth (RGB frames, depth, instance masks with depth-ordered layer
//! labels, pose and camera tracks, canonical renders) for training and
//! oracle-based testing.

pub mod corpus;
pub mod error;
pub mod motion;
pub mod render;
pub mod spec;

pub use corpus::{clip_dir, clip_name, generate_corpus, load_canonical_png, write_clip};
pub use error::{Result, SynthError};
pub use motion::{camera_at, camera_for, pose_at};
pub use render::{
    background_color, render_character, render_clip, vertex_palette, GroundTruth, FIRST_OBJECT_ID,
    HUMAN_ID,
};
pub use spec::{
    sample_spec, with_alternate_palette, Background, CameraPath, CharacterSpec, MotionKind,
    ObjectSpec, OccluderShape, SceneSpec, SpecDistribution,
};
