//! Video media containers, byte-exact file formats, hierarchical layer
//! decomposition (tracking, depth-ordered assignment, component extraction),
//! and deterministic scene recovery.

pub mod clip;
pub mod decompose;
pub mod error;
pub mod formats;
pub mod recover;

pub use clip::{DepthClip, InstanceClip, LayerRole, LayeredClip, Masklet, VideoClip};
pub use decompose::{
    assign_layers, extract_component, extract_components, track_instances, validate_partition,
    LayerAssignment,
};
pub use error::{Result, VideoError};
pub use formats::{ClipMeta, Manifest, ManifestEntry, Split};
pub use recover::recover_scene;
