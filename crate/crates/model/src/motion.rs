//! Pose encoder: embeds stacked motion feature maps into the motion code on
//! the denoiser's latent grid. Strictly per-frame (no temporal mixing), so
//! permuting frames permutes the code's temporal slices.

use crate::builders::{conv2d, group_norm, InitStyle};
use crate::config::ModelConfig;
use crate::error::Result;
use strata_core::graph::{GraphBuilder, NodeId};
use strata_core::params::Init;
use strata_core::{Graph, ParamSet, Scalar, Tensor, Workspace};

/// Append the pose encoder to `gb`. Input shape is
/// `[code_dim + 1, frames, frame, frame]`; output is the motion code
/// `[c1, frames, latent, latent]`. Three strided stages: the first two halve
/// the spatial extent, the third aligns channels at stride 1 (frame
/// resolution is 4x the latent grid).
pub fn build_pose_encoder(
    gb: &mut GraphBuilder,
    maps: NodeId,
    cfg: &ModelConfig,
    _style: InitStyle,
) -> Result<NodeId> {
    let d_in = cfg.motion_code_dim + 1;
    let mid = cfg.motion_code_dim + 4;
    let h1 = conv2d(gb, maps, "ep.conv1", d_in, mid, 3, 2, Init::KaimingFanIn)?;
    let n1 = group_norm(gb, h1, "ep.norm1", mid, cfg.groups)?;
    let a1 = gb.silu(n1);
    let h2 = conv2d(gb, a1, "ep.conv2", mid, 2 * mid, 3, 2, Init::KaimingFanIn)?;
    let n2 = group_norm(gb, h2, "ep.norm2", 2 * mid, cfg.groups)?;
    let a2 = gb.silu(n2);
    conv2d(gb, a2, "ep.conv3", 2 * mid, cfg.c1, 3, 1, Init::KaimingFanIn)
}

/// Standalone pose-encoder graph for sampling and tests.
pub struct PoseEncoder {
    pub graph: Graph,
    pub maps: NodeId,
    pub code: NodeId,
}

pub fn pose_encoder_graph(cfg: &ModelConfig) -> Result<PoseEncoder> {
    let mut gb = GraphBuilder::new();
    let maps = gb.input("maps", &cfg.motion_maps_shape())?;
    let code = build_pose_encoder(&mut gb, maps, cfg, InitStyle::Training)?;
    Ok(PoseEncoder {
        graph: gb.build(),
        maps,
        code,
    })
}

/// Evaluate the motion code for one stacked map tensor.
pub fn encode_motion<T: Scalar>(
    enc: &PoseEncoder,
    params: &ParamSet<T>,
    maps: Tensor<T>,
    parallel: bool,
) -> Result<Tensor<T>> {
    let mut ws = Workspace::new(&enc.graph).with_parallel(parallel);
    ws.bind(enc.maps, maps)?;
    Ok(ws.forward(params, enc.code)?.clone())
}
