//! Identity encoder: one trainable network with two heads over the
//! canonical appearance image — a pooled global vector and a local feature
//! pyramid aligned to the denoiser's two attention resolutions.

use crate::builders::{conv2d, group_norm, InitStyle};
use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use strata_core::graph::{GraphBuilder, NodeId};
use strata_core::params::Init;
use strata_core::{Graph, ParamSet, Tensor, Workspace};
use strata_geom::CanonicalImage;

/// The identity code: a global vector plus local maps at 1/8 and 1/16 of
/// the frame edge.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCode {
    pub global: Tensor<f32>,
    pub local16: Tensor<f32>,
    pub local8: Tensor<f32>,
}

pub struct IdentityOutputs {
    pub global: NodeId,
    pub local16: NodeId,
    pub local8: NodeId,
}

/// Append the identity encoder; input is the canonical RGBA image
/// `[4, 1, frame, frame]`.
pub fn build_identity_encoder(
    gb: &mut GraphBuilder,
    canonical: NodeId,
    cfg: &ModelConfig,
    _style: InitStyle,
) -> Result<IdentityOutputs> {
    let (l16, l8) = (cfg.id_local16, cfg.id_local8);
    let h1 = conv2d(gb, canonical, "id.conv1", 4, 16, 3, 2, Init::KaimingFanIn)?;
    let n1 = group_norm(gb, h1, "id.norm1", 16, cfg.groups)?;
    let a1 = gb.silu(n1);
    let h2 = conv2d(gb, a1, "id.conv2", 16, l16, 3, 2, Init::KaimingFanIn)?;
    let n2 = group_norm(gb, h2, "id.norm2", l16, cfg.groups)?;
    let a2 = gb.silu(n2);
    let local16 = conv2d(gb, a2, "id.conv3", l16, l16, 3, 2, Init::KaimingFanIn)?;
    let n3 = group_norm(gb, local16, "id.norm3", l16, cfg.groups)?;
    let a3 = gb.silu(n3);
    let local8 = conv2d(gb, a3, "id.conv4", l16, l8, 3, 2, Init::KaimingFanIn)?;
    let pooled = gb.global_mean(local8)?;
    let w = gb.param("id.head.w", &[cfg.id_global_dim, l8], Init::KaimingFanIn)?;
    let b = gb.param("id.head.b", &[cfg.id_global_dim], Init::Zeros)?;
    let global = gb.linear(pooled, w, Some(b))?;
    Ok(IdentityOutputs {
        global,
        local16,
        local8,
    })
}

pub struct IdentityEncoder {
    pub graph: Graph,
    pub canonical: NodeId,
    pub outputs: IdentityOutputs,
}

pub fn identity_encoder_graph(cfg: &ModelConfig) -> Result<IdentityEncoder> {
    let mut gb = GraphBuilder::new();
    let canonical = gb.input("canonical", &cfg.canonical_shape())?;
    let outputs = build_identity_encoder(&mut gb, canonical, cfg, InitStyle::Training)?;
    Ok(IdentityEncoder {
        graph: gb.build(),
        canonical,
        outputs,
    })
}

/// Encode a canonical image. An all-transparent image is an error: there is
/// no identity evidence to embed.
pub fn encode_identity(
    enc: &IdentityEncoder,
    params: &ParamSet<f32>,
    canonical: &CanonicalImage<f64>,
    parallel: bool,
) -> Result<IdentityCode> {
    if canonical.max_alpha() == 0.0 {
        return Err(ModelError::EmptyCanonical);
    }
    let mut ws = Workspace::new(&enc.graph).with_parallel(parallel);
    ws.bind(enc.canonical, canonical.to_tensor())?;
    ws.forward(params, enc.outputs.global)?;
    ws.forward(params, enc.outputs.local16)?;
    ws.forward(params, enc.outputs.local8)?;
    Ok(IdentityCode {
        global: ws.value(enc.outputs.global).unwrap().clone(),
        local16: ws.value(enc.outputs.local16).unwrap().clone(),
        local8: ws.value(enc.outputs.local8).unwrap().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use strata_core::params::init_params;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            frame_size: 32,
            groups: 2,
            id_local16: 8,
            id_local8: 8,
            id_global_dim: 6,
            ..ModelConfig::default()
        }
    }

    fn solid_canonical(size: usize, rgb: [f64; 3]) -> CanonicalImage<f64> {
        let hw = size * size;
        let mut img = CanonicalImage::transparent(size, size);
        for i in 0..hw {
            img.rgba[i] = rgb[0];
            img.rgba[hw + i] = rgb[1];
            img.rgba[2 * hw + i] = rgb[2];
            img.rgba[3 * hw + i] = 1.0;
        }
        img
    }

    #[test]
    fn local_maps_align_to_the_attention_grids() {
        let cfg = tiny_cfg();
        let enc = identity_encoder_graph(&cfg).unwrap();
        let e = cfg.frame_size;
        assert_eq!(enc.graph.shape_of(enc.outputs.local16), &[8, 1, e / 8, e / 8]);
        assert_eq!(enc.graph.shape_of(enc.outputs.local8), &[8, 1, e / 16, e / 16]);
        assert_eq!(enc.graph.shape_of(enc.outputs.global), &[6]);
    }

    #[test]
    fn same_image_same_code_different_colors_different_code() {
        let cfg = tiny_cfg();
        let enc = identity_encoder_graph(&cfg).unwrap();
        let params: ParamSet<f32> = init_params(&enc.graph, 9);
        let a = solid_canonical(32, [0.8, 0.2, 0.1]);
        let b = solid_canonical(32, [0.1, 0.2, 0.8]);
        let ca1 = encode_identity(&enc, &params, &a, false).unwrap();
        let ca2 = encode_identity(&enc, &params, &a, false).unwrap();
        let cb = encode_identity(&enc, &params, &b, false).unwrap();
        assert_eq!(ca1, ca2);
        let l2: f32 = ca1
            .global
            .data()
            .iter()
            .zip(cb.global.data())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        assert!(l2 > 0.0, "different appearances must produce different codes");
    }

    #[test]
    fn all_transparent_canonical_is_an_error() {
        let cfg = tiny_cfg();
        let enc = identity_encoder_graph(&cfg).unwrap();
        let params: ParamSet<f32> = init_params(&enc.graph, 9);
        let img = CanonicalImage::transparent(32, 32);
        assert!(matches!(
            encode_identity(&enc, &params, &img, false),
            Err(ModelError::EmptyCanonical)
        ));
    }
}
