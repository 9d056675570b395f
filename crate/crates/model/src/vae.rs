//! Shared variational autoencoder: pretrained on corpus frames, then frozen
//! for the rest of the pipeline. Encoding for condition codes always uses
//! the mean latent (no sampling), so codes are deterministic.

use crate::builders::{conv2d, group_norm, InitStyle};
use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use rand::Rng;
use strata_core::graph::{GraphBuilder, NodeId};
use strata_core::params::{init_params, Init};
use strata_core::rng::seed_stream;
use strata_core::{checkpoint, AdamConfig, AdamState, Graph, ParamSet, Tensor, Workspace};
use strata_video::VideoClip;

/// Frozen-checked VAE parameters plus latent normalization statistics.
#[derive(Clone, Debug)]
pub struct VaeParams {
    pub params: ParamSet<f32>,
    pub frozen: bool,
    /// Per-channel mean/std of training mean-latents; used to normalize x0
    /// for diffusion.
    pub latent_mean: Vec<f32>,
    pub latent_std: Vec<f32>,
}

pub struct VaeGraphs {
    pub cfg: ModelConfig,
    pub enc: Graph,
    pub enc_input: NodeId,
    pub enc_mu: NodeId,
    pub enc_logvar: NodeId,
    pub dec: Graph,
    pub dec_input: NodeId,
    pub dec_output: NodeId,
    /// Training graph: encoder + reparameterized decode + loss terms.
    pub train: Graph,
    pub train_input: NodeId,
    pub train_noise: NodeId,
    pub train_loss: NodeId,
    pub train_recon_mse: NodeId,
}

fn build_encoder(
    gb: &mut GraphBuilder,
    x: NodeId,
    cfg: &ModelConfig,
) -> Result<(NodeId, NodeId)> {
    let b = cfg.vae_base;
    let h1 = conv2d(gb, x, "vae.enc1", 3, b, 3, 2, Init::KaimingFanIn)?;
    let n1 = group_norm(gb, h1, "vae.encn1", b, cfg.groups)?;
    let a1 = gb.silu(n1);
    let h2 = conv2d(gb, a1, "vae.enc2", b, 2 * b, 3, 2, Init::KaimingFanIn)?;
    let n2 = group_norm(gb, h2, "vae.encn2", 2 * b, cfg.groups)?;
    let a2 = gb.silu(n2);
    let h3 = conv2d(gb, a2, "vae.enc3", 2 * b, 2 * b, 3, 1, Init::KaimingFanIn)?;
    let a3 = gb.silu(h3);
    let head = conv2d(gb, a3, "vae.enc4", 2 * b, 2 * cfg.latent_channels, 3, 1, Init::KaimingFanIn)?;
    let mu = gb.slice0(head, 0, cfg.latent_channels)?;
    let logvar = gb.slice0(head, cfg.latent_channels, 2 * cfg.latent_channels)?;
    Ok((mu, logvar))
}

fn build_decoder(gb: &mut GraphBuilder, z: NodeId, cfg: &ModelConfig) -> Result<NodeId> {
    let b = cfg.vae_base;
    let h1 = conv2d(gb, z, "vae.dec1", cfg.latent_channels, 2 * b, 3, 1, Init::KaimingFanIn)?;
    let n1 = group_norm(gb, h1, "vae.decn1", 2 * b, cfg.groups)?;
    let a1 = gb.silu(n1);
    let u1 = gb.upsample2x(a1)?;
    let h2 = conv2d(gb, u1, "vae.dec2", 2 * b, b, 3, 1, Init::KaimingFanIn)?;
    let n2 = group_norm(gb, h2, "vae.decn2", b, cfg.groups)?;
    let a2 = gb.silu(n2);
    let u2 = gb.upsample2x(a2)?;
    let h3 = conv2d(gb, u2, "vae.dec3", b, b, 3, 1, Init::KaimingFanIn)?;
    let a3 = gb.silu(h3);
    conv2d(gb, a3, "vae.dec4", b, 3, 3, 1, Init::KaimingFanIn)
}

/// Build encoder/decoder/training graphs for a given frame-batch length
/// (frames sit on the time axis; every stage is per-frame).
pub fn vae_graphs(cfg: &ModelConfig, batch_frames: usize, kl_weight: f64) -> Result<VaeGraphs> {
    let (h, w) = (cfg.frame_size, cfg.frame_size);
    let lat = cfg.latent_size();

    let mut egb = GraphBuilder::new();
    let enc_input = egb.input("frames", &[3, batch_frames, h, w])?;
    let (enc_mu, enc_logvar) = build_encoder(&mut egb, enc_input, cfg)?;
    let enc = egb.build();

    let mut dgb = GraphBuilder::new();
    let dec_input = dgb.input("latents", &[cfg.latent_channels, batch_frames, lat, lat])?;
    let dec_output = build_decoder(&mut dgb, dec_input, cfg)?;
    let dec = dgb.build();

    let mut tgb = GraphBuilder::new();
    let train_input = tgb.input("frames", &[3, batch_frames, h, w])?;
    let train_noise = tgb.input("noise", &[cfg.latent_channels, batch_frames, lat, lat])?;
    let (mu, logvar) = build_encoder(&mut tgb, train_input, cfg)?;
    // z = mu + exp(0.5 * logvar) * noise
    let half_lv = tgb.affine(logvar, 0.5, 0.0);
    let std = tgb.exp(half_lv);
    let scaled = tgb.mul(std, train_noise)?;
    let z = tgb.add(mu, scaled)?;
    let recon = build_decoder(&mut tgb, z, cfg)?;
    let diff = tgb.sub(recon, train_input)?;
    let sq = tgb.square(diff);
    let train_recon_mse = tgb.mean_all(sq);
    // KL(N(mu, sigma^2) || N(0,1)) per element:
    // 0.5 * (mu^2 + exp(logvar) - logvar - 1)
    let mu2 = tgb.square(mu);
    let var = tgb.exp(logvar);
    let sum1 = tgb.add(mu2, var)?;
    let neg_lv = tgb.affine(logvar, -1.0, -1.0);
    let kl_terms = tgb.add(sum1, neg_lv)?;
    let kl_mean = tgb.mean_all(kl_terms);
    let kl = tgb.affine(kl_mean, 0.5 * kl_weight, 0.0);
    let train_loss = tgb.add(train_recon_mse, kl)?;
    let train = tgb.build();

    Ok(VaeGraphs {
        cfg: *cfg,
        enc,
        enc_input,
        enc_mu,
        enc_logvar,
        dec,
        dec_input,
        dec_output,
        train,
        train_input,
        train_noise,
        train_loss,
        train_recon_mse,
    })
}

/// Mean-latent encoding of a `[3, n, h, w]` tensor in `[0, 1]`.
pub fn encode_mean(
    cfg: &ModelConfig,
    params: &ParamSet<f32>,
    frames: &Tensor<f32>,
    parallel: bool,
) -> Result<Tensor<f32>> {
    let n = frames.shape()[1];
    let g = vae_graphs(cfg, n, 0.0)?;
    let mut ws = Workspace::new(&g.enc).with_parallel(parallel);
    ws.bind(g.enc_input, frames.clone())?;
    Ok(ws.forward(params, g.enc_mu)?.clone())
}

pub fn decode(
    cfg: &ModelConfig,
    params: &ParamSet<f32>,
    latents: &Tensor<f32>,
    parallel: bool,
) -> Result<Tensor<f32>> {
    let n = latents.shape()[1];
    let g = vae_graphs(cfg, n, 0.0)?;
    let mut ws = Workspace::new(&g.dec).with_parallel(parallel);
    ws.bind(g.dec_input, latents.clone())?;
    Ok(ws.forward(params, g.dec_output)?.clone())
}

/// Normalize a mean latent to roughly unit scale for diffusion.
pub fn normalize_latent(vae: &VaeParams, z: &Tensor<f32>) -> Tensor<f32> {
    affine_per_channel(z, &vae.latent_mean, &vae.latent_std, true)
}

pub fn denormalize_latent(vae: &VaeParams, z: &Tensor<f32>) -> Tensor<f32> {
    affine_per_channel(z, &vae.latent_mean, &vae.latent_std, false)
}

fn affine_per_channel(z: &Tensor<f32>, mean: &[f32], std: &[f32], forward: bool) -> Tensor<f32> {
    let (c, t, h, w) = z.dims4();
    let mut out = z.clone();
    for ch in 0..c {
        let plane = &mut out.data_mut()[ch * t * h * w..(ch + 1) * t * h * w];
        for v in plane.iter_mut() {
            *v = if forward {
                (*v - mean[ch]) / std[ch]
            } else {
                *v * std[ch] + mean[ch]
            };
        }
    }
    out
}

/// Scene and occlusion condition codes: per-frame mean latents of the
/// recovered scene and the occlusion component, concatenated scene-first
/// along channels.
#[derive(Clone, Debug)]
pub struct SceneOcclusionCode {
    pub c_s: Tensor<f32>,
    pub c_o: Tensor<f32>,
    pub c_so: Tensor<f32>,
}

pub fn encode_scene_occlusion(
    cfg: &ModelConfig,
    vae: &VaeParams,
    recovered_scene: &Tensor<f32>,
    occlusion: &Tensor<f32>,
    parallel: bool,
) -> Result<SceneOcclusionCode> {
    if !vae.frozen {
        return Err(ModelError::VaeNotFrozen);
    }
    if recovered_scene.shape() != occlusion.shape() {
        return Err(ModelError::Shape(format!(
            "scene {:?} vs occlusion {:?}",
            recovered_scene.shape(),
            occlusion.shape()
        )));
    }
    let c_s = normalize_latent(vae, &encode_mean(cfg, &vae.params, recovered_scene, parallel)?);
    let c_o = normalize_latent(vae, &encode_mean(cfg, &vae.params, occlusion, parallel)?);
    let (c, t, h, w) = c_s.dims4();
    let mut data = Vec::with_capacity(2 * c * t * h * w);
    data.extend_from_slice(c_s.data());
    data.extend_from_slice(c_o.data());
    let c_so = Tensor::new(&[2 * c, t, h, w], data).expect("layout");
    Ok(SceneOcclusionCode { c_s, c_o, c_so })
}

#[derive(Clone, Copy, Debug)]
pub struct VaePretrainConfig {
    pub steps: u64,
    pub batch_frames: usize,
    pub lr: f64,
    pub kl_weight: f64,
    pub seed: u64,
}

impl Default for VaePretrainConfig {
    fn default() -> Self {
        Self {
            steps: 1200,
            batch_frames: 8,
            lr: 1.5e-3,
            kl_weight: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VaeReport {
    pub steps: u64,
    pub final_loss: f64,
    pub heldout_psnr: f64,
}

/// Pretrain on the given clips (any mix of sources, recovered scenes, and
/// components), freeze, and compute latent statistics. Returns the frozen
/// parameters and a report with the held-out mean-latent reconstruction
/// PSNR.
pub fn pretrain_vae(
    cfg: &ModelConfig,
    train_clips: &[&VideoClip],
    heldout_clips: &[&VideoClip],
    pcfg: &VaePretrainConfig,
) -> Result<(VaeParams, VaeReport)> {
    assert!(!train_clips.is_empty(), "no VAE training data");
    let graphs = vae_graphs(cfg, pcfg.batch_frames, pcfg.kl_weight)?;
    let mut params: ParamSet<f32> = init_params(&graphs.train, pcfg.seed);
    let mut adam = AdamState::new(&params, AdamConfig::with_lr(pcfg.lr));
    let mut rng = seed_stream(pcfg.seed, "vae-train", 0);
    let lat = cfg.latent_size();

    let mut ws = Workspace::new(&graphs.train).with_parallel(true);
    let mut last_loss = f64::NAN;
    for step in 0..pcfg.steps {
        // Assemble a batch of random frames along the time axis.
        let mut batch = Tensor::zeros(&[3, pcfg.batch_frames, cfg.frame_size, cfg.frame_size]);
        let hw = cfg.frame_size * cfg.frame_size;
        for bi in 0..pcfg.batch_frames {
            let clip = train_clips[rng.gen_range(0..train_clips.len())];
            let t = rng.gen_range(0..clip.frames);
            let frame = clip.frame(t);
            for c in 0..3 {
                let dst = &mut batch.data_mut()[(c * pcfg.batch_frames + bi) * hw..][..hw];
                for (i, o) in dst.iter_mut().enumerate() {
                    *o = frame[i * 3 + c] as f32 / 255.0;
                }
            }
        }
        let noise = Tensor::<f32>::randn(&[cfg.latent_channels, pcfg.batch_frames, lat, lat], &mut rng);
        ws.bind(graphs.train_input, batch)?;
        ws.bind(graphs.train_noise, noise)?;
        let loss = ws.forward(&params, graphs.train_loss)?.item() as f64;
        if !loss.is_finite() {
            return Err(ModelError::VaeDiverged(step));
        }
        last_loss = loss;
        ws.backward(graphs.train_loss)?;
        let grads: Vec<Option<Tensor<f32>>> = graphs
            .train
            .params()
            .map(|(_, id)| ws.grad(id).cloned())
            .collect();
        adam.step(&mut params, &grads)?;
    }

    // Latent statistics over a sample of training frames (mean latents).
    let mut stats_frames: Vec<Tensor<f32>> = Vec::new();
    let mut stat_rng = seed_stream(pcfg.seed, "vae-stats", 0);
    for _ in 0..32.min(train_clips.len() * 2) {
        let clip = train_clips[stat_rng.gen_range(0..train_clips.len())];
        let t = stat_rng.gen_range(0..clip.frames);
        stats_frames.push(clip.frame_tensor(t));
    }
    let mut mean = vec![0f64; cfg.latent_channels];
    let mut m2 = vec![0f64; cfg.latent_channels];
    let mut count = 0f64;
    for f in &stats_frames {
        let z = encode_mean(cfg, &params, f, true)?;
        let (c, t, h, w) = z.dims4();
        for ch in 0..c {
            for &v in &z.data()[ch * t * h * w..(ch + 1) * t * h * w] {
                mean[ch] += v as f64;
                m2[ch] += (v as f64) * (v as f64);
            }
        }
        count += (t * h * w) as f64;
    }
    let latent_mean: Vec<f32> = mean.iter().map(|&s| (s / count) as f32).collect();
    let latent_std: Vec<f32> = m2
        .iter()
        .zip(&latent_mean)
        .map(|(&s2, &m)| (((s2 / count) - (m as f64) * (m as f64)).max(1e-8).sqrt()) as f32)
        .collect();

    let vae = VaeParams {
        params,
        frozen: true,
        latent_mean,
        latent_std,
    };

    // Held-out reconstruction quality through the mean latent.
    let eval_set = if heldout_clips.is_empty() { train_clips } else { heldout_clips };
    let mut se = 0.0f64;
    let mut n = 0.0f64;
    for clip in eval_set.iter().take(8) {
        let frames = clip.to_tensor();
        let z = encode_mean(cfg, &vae.params, &frames, true)?;
        let recon = decode(cfg, &vae.params, &z, true)?;
        for (a, b) in recon.data().iter().zip(frames.data()) {
            let d = (*a - *b) as f64;
            se += d * d;
            n += 1.0;
        }
    }
    let mse = se / n;
    let heldout_psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (1.0 / mse).log10() };

    Ok((
        vae,
        VaeReport {
            steps: pcfg.steps,
            final_loss: last_loss,
            heldout_psnr,
        },
    ))
}

const META_FROZEN: &str = "meta.frozen";
const META_LATENT_MEAN: &str = "meta.latent_mean";
const META_LATENT_STD: &str = "meta.latent_std";

pub fn save_vae(vae: &VaeParams, path: &std::path::Path) -> Result<()> {
    let mut all = vae.params.clone();
    all.insert(META_FROZEN, Tensor::scalar(if vae.frozen { 1.0 } else { 0.0 }))?;
    all.insert(META_LATENT_MEAN, Tensor::new(&[vae.latent_mean.len()], vae.latent_mean.clone())?)?;
    all.insert(META_LATENT_STD, Tensor::new(&[vae.latent_std.len()], vae.latent_std.clone())?)?;
    checkpoint::save(&all, path)?;
    Ok(())
}

pub fn load_vae(path: &std::path::Path) -> Result<VaeParams> {
    let all: ParamSet<f32> = checkpoint::load(path)?;
    let mut params = ParamSet::new();
    let mut frozen = false;
    let mut latent_mean = Vec::new();
    let mut latent_std = Vec::new();
    for (name, t) in all.iter() {
        match name {
            META_FROZEN => frozen = t.item() != 0.0,
            META_LATENT_MEAN => latent_mean = t.data().to_vec(),
            META_LATENT_STD => latent_std = t.data().to_vec(),
            _ => params.insert(name, t.clone())?,
        }
    }
    Ok(VaeParams {
        params,
        frozen,
        latent_mean,
        latent_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            frame_size: 16,
            frames: 2,
            vae_base: 6,
            groups: 2,
            latent_channels: 2,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn encoder_and_decoder_are_shape_inverse() {
        let cfg = tiny_cfg();
        let g = vae_graphs(&cfg, 3, 0.0).unwrap();
        assert_eq!(g.enc.shape_of(g.enc_mu), &[2, 3, 4, 4]);
        assert_eq!(g.dec.shape_of(g.dec_output), &[3, 3, 16, 16]);
    }

    #[test]
    fn mean_encoding_is_deterministic() {
        let cfg = tiny_cfg();
        let g = vae_graphs(&cfg, 2, 0.0).unwrap();
        let params: ParamSet<f32> = init_params(&g.enc, 5);
        let frames = Tensor::from_fn(&[3, 2, 16, 16], |i| (i % 97) as f32 / 97.0);
        let a = encode_mean(&cfg, &params, &frames, false).unwrap();
        let b = encode_mean(&cfg, &params, &frames, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unfrozen_vae_is_rejected_for_condition_codes() {
        let cfg = tiny_cfg();
        let g = vae_graphs(&cfg, 2, 0.0).unwrap();
        let vae = VaeParams {
            params: init_params(&g.enc, 5),
            frozen: false,
            latent_mean: vec![0.0; 2],
            latent_std: vec![1.0; 2],
        };
        let frames = Tensor::zeros(&[3, 2, 16, 16]);
        assert!(matches!(
            encode_scene_occlusion(&cfg, &vae, &frames, &frames, false),
            Err(ModelError::VaeNotFrozen)
        ));
    }

    #[test]
    fn swapping_inputs_swaps_the_channel_blocks_of_c_so() {
        let cfg = tiny_cfg();
        let g = vae_graphs(&cfg, 2, 0.0).unwrap();
        let vae = VaeParams {
            params: init_params(&g.enc, 5),
            frozen: true,
            latent_mean: vec![0.0; 2],
            latent_std: vec![1.0; 2],
        };
        let a = Tensor::from_fn(&[3, 2, 16, 16], |i| (i % 13) as f32 / 13.0);
        let b = Tensor::from_fn(&[3, 2, 16, 16], |i| (i % 7) as f32 / 7.0);
        let ab = encode_scene_occlusion(&cfg, &vae, &a, &b, false).unwrap();
        let ba = encode_scene_occlusion(&cfg, &vae, &b, &a, false).unwrap();
        assert_eq!(ab.c_s, ba.c_o);
        assert_eq!(ab.c_o, ba.c_s);
        let n = ab.c_s.numel();
        assert_eq!(&ab.c_so.data()[..n], ab.c_s.data());
        assert_eq!(&ab.c_so.data()[n..], ab.c_o.data());
    }

    #[test]
    fn vae_checkpoint_roundtrip() {
        let cfg = tiny_cfg();
        let g = vae_graphs(&cfg, 2, 0.0).unwrap();
        let vae = VaeParams {
            params: init_params(&g.train, 5),
            frozen: true,
            latent_mean: vec![0.25, -0.5],
            latent_std: vec![1.5, 0.75],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vae.ckpt");
        save_vae(&vae, &path).unwrap();
        let back = load_vae(&path).unwrap();
        assert!(back.frozen);
        assert_eq!(back.latent_mean, vae.latent_mean);
        assert_eq!(back.latent_std, vae.latent_std);
        assert_eq!(back.params.content_hash(), vae.params.content_hash());
    }
}
