//! Small graph-building helpers shared by the encoders and the denoiser.

use strata_core::graph::{GraphBuilder, NodeId};
use strata_core::params::Init;
use strata_core::Result;

pub const GN_EPS: f64 = 1e-5;

/// Whether structurally-neutral layers (modulation heads, output heads,
/// temporal mixers, attention output projections) start at zero (training)
/// or random (gradient checks need non-degenerate gradients everywhere).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitStyle {
    Training,
    Random,
}

impl InitStyle {
    pub fn neutral(self) -> Init {
        match self {
            InitStyle::Training => Init::Zeros,
            InitStyle::Random => Init::Normal(0.2),
        }
    }
}

/// Per-frame 2D convolution with bias.
pub fn conv2d(
    gb: &mut GraphBuilder,
    x: NodeId,
    name: &str,
    ic: usize,
    oc: usize,
    kernel: usize,
    stride: usize,
    init: Init,
) -> Result<NodeId> {
    let w = gb.param(&format!("{name}.w"), &[oc, ic, 1, kernel, kernel], init)?;
    let b = gb.param(&format!("{name}.b"), &[oc], Init::Zeros)?;
    gb.conv(x, w, Some(b), (stride, stride), (0, kernel / 2, kernel / 2))
}

/// Temporal mixing convolution (kernel 3 over time, channel-preserving).
pub fn temporal_conv(
    gb: &mut GraphBuilder,
    x: NodeId,
    name: &str,
    channels: usize,
    init: Init,
) -> Result<NodeId> {
    let w = gb.param(&format!("{name}.w"), &[channels, channels, 3, 1, 1], init)?;
    let b = gb.param(&format!("{name}.b"), &[channels], Init::Zeros)?;
    gb.conv(x, w, Some(b), (1, 1), (1, 0, 0))
}

/// Spatio-temporal fusion convolution (3x3x3).
pub fn fusion_conv(
    gb: &mut GraphBuilder,
    x: NodeId,
    name: &str,
    ic: usize,
    oc: usize,
) -> Result<NodeId> {
    let w = gb.param(&format!("{name}.w"), &[oc, ic, 3, 3, 3], Init::KaimingFanIn)?;
    let b = gb.param(&format!("{name}.b"), &[oc], Init::Zeros)?;
    gb.conv(x, w, Some(b), (1, 1), (1, 1, 1))
}

/// Largest divisor of `channels` that does not exceed `preferred`.
pub fn groups_for(channels: usize, preferred: usize) -> usize {
    (1..=preferred.min(channels))
        .rev()
        .find(|g| channels % g == 0)
        .unwrap_or(1)
}

/// Group normalization with learned per-channel gain/bias. The group count
/// is snapped down to a divisor of the channel count.
pub fn group_norm(
    gb: &mut GraphBuilder,
    x: NodeId,
    name: &str,
    channels: usize,
    groups: usize,
) -> Result<NodeId> {
    let gamma = gb.param(&format!("{name}.gamma"), &[channels], Init::Ones)?;
    let beta = gb.param(&format!("{name}.beta"), &[channels], Init::Zeros)?;
    gb.group_norm(x, gamma, beta, groups_for(channels, groups), GN_EPS)
}

/// norm -> silu -> conv
pub fn norm_act_conv(
    gb: &mut GraphBuilder,
    x: NodeId,
    name: &str,
    ic: usize,
    oc: usize,
    kernel: usize,
    stride: usize,
    groups: usize,
    conv_init: Init,
) -> Result<NodeId> {
    let n = group_norm(gb, x, &format!("{name}.norm"), ic, groups)?;
    let a = gb.silu(n);
    conv2d(gb, a, &format!("{name}.conv"), ic, oc, kernel, stride, conv_init)
}

/// Single-head cross-attention with an attention dimension equal to the
/// query channel count; the output projection's init is the caller's choice
/// (zero for residual neutrality in training).
#[allow(clippy::too_many_arguments)]
pub fn cross_attention(
    gb: &mut GraphBuilder,
    x: NodeId,
    ctx: NodeId,
    name: &str,
    channels: usize,
    ctx_channels: usize,
    out_init: Init,
) -> Result<NodeId> {
    let wq = gb.param(&format!("{name}.wq"), &[channels, channels], Init::KaimingFanIn)?;
    let wk = gb.param(&format!("{name}.wk"), &[channels, ctx_channels], Init::KaimingFanIn)?;
    let wv = gb.param(&format!("{name}.wv"), &[channels, ctx_channels], Init::KaimingFanIn)?;
    let wo = gb.param(&format!("{name}.wo"), &[channels, channels], out_init)?;
    gb.cross_attn(x, ctx, wq, wk, wv, wo)
}

/// Feature-wise modulation head: linear(cond) -> film(x).
pub fn film_from(
    gb: &mut GraphBuilder,
    x: NodeId,
    cond: NodeId,
    name: &str,
    channels: usize,
    cond_dim: usize,
    init: Init,
) -> Result<NodeId> {
    let w = gb.param(&format!("{name}.w"), &[2 * channels, cond_dim], init)?;
    let b = gb.param(&format!("{name}.b"), &[2 * channels], Init::Zeros)?;
    let c = gb.linear(cond, w, Some(b))?;
    gb.film(x, c)
}
