//! Central finite-difference verification of every layer's backward pass,
//! run at 64-bit on random 8x8 inputs. The analytic gradient must agree with
//! the two-sided difference quotient to a relative error below 1e-5.

use strata_core::gradcheck::check_gradients;
use strata_core::graph::{GraphBuilder, NodeId};
use strata_core::params::{init_params, Init, ParamSet};
use strata_core::rng::seed_stream;
use strata_core::tensor::Tensor;

const TOL: f64 = 1e-5;
const STEP: f64 = 1e-6;

struct Case {
    graph: strata_core::Graph,
    inputs: Vec<(NodeId, Tensor<f64>)>,
    loss: NodeId,
}

/// loss = sum(out * r) with a fixed random projection r, so every output
/// element influences the scalar loss.
fn projected_loss_with_shape(
    gb: &mut GraphBuilder,
    out: NodeId,
    shape: &[usize],
    seed: u64,
) -> (NodeId, (NodeId, Tensor<f64>)) {
    let r = gb.input("projection", shape).unwrap();
    let prod = gb.mul(out, r).unwrap();
    let loss = gb.sum_all(prod);
    let mut rng = seed_stream(seed, "projection", 7);
    let r_val = Tensor::<f64>::randn(shape, &mut rng);
    (loss, (r, r_val))
}

fn rand_input(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = seed_stream(seed, "input", 3);
    Tensor::randn(shape, &mut rng).with_requires_grad(true)
}

fn run_case(name: &str, case: Case) {
    let params: ParamSet<f64> = init_params(&case.graph, 99);
    let report = check_gradients(&case.graph, &params, &case.inputs, case.loss, STEP).unwrap();
    assert!(
        report.max_rel_err < TOL,
        "{name}: max rel err {} at {:?} over {} elements",
        report.max_rel_err,
        report.worst,
        report.checked
    );
    assert!(report.checked > 0, "{name}: nothing checked");
}

#[test]
fn conv2d_per_frame() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[3, 2, 8, 8]).unwrap();
    let w = gb.param("w", &[4, 3, 1, 3, 3], Init::Normal(0.4)).unwrap();
    let b = gb.param("b", &[4], Init::Normal(0.2)).unwrap();
    let y = gb.conv(x, w, Some(b), (1, 1), (0, 1, 1)).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[4, 2, 8, 8], 1);
    run_case(
        "conv2d",
        Case {
            inputs: vec![(x, rand_input(&[3, 2, 8, 8], 11)), proj],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn conv2d_stride2() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[3, 2, 8, 8]).unwrap();
    let w = gb.param("w", &[4, 3, 1, 3, 3], Init::Normal(0.4)).unwrap();
    let b = gb.param("b", &[4], Init::Normal(0.2)).unwrap();
    let y = gb.conv(x, w, Some(b), (2, 2), (0, 1, 1)).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[4, 2, 4, 4], 2);
    run_case(
        "conv2d_stride2",
        Case {
            inputs: vec![(x, rand_input(&[3, 2, 8, 8], 12)), proj],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn fusion_conv_3x3x3() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[3, 4, 8, 8]).unwrap();
    let w = gb.param("w", &[4, 3, 3, 3, 3], Init::Normal(0.3)).unwrap();
    let b = gb.param("b", &[4], Init::Normal(0.2)).unwrap();
    let y = gb.conv(x, w, Some(b), (1, 1), (1, 1, 1)).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[4, 4, 8, 8], 3);
    run_case(
        "fusion_conv",
        Case {
            inputs: vec![(x, rand_input(&[3, 4, 8, 8], 13)), proj],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn temporal_mix_conv() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[4, 6, 8, 8]).unwrap();
    let w = gb.param("w", &[4, 4, 3, 1, 1], Init::Normal(0.4)).unwrap();
    let y = gb.conv(x, w, None, (1, 1), (1, 0, 0)).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[4, 6, 8, 8], 4);
    run_case(
        "temporal_mix",
        Case {
            inputs: vec![(x, rand_input(&[4, 6, 8, 8], 14)), proj],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn group_norm() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[4, 2, 8, 8]).unwrap();
    let gamma = gb.param("gamma", &[4], Init::Normal(0.5)).unwrap();
    let beta = gb.param("beta", &[4], Init::Normal(0.5)).unwrap();
    let y = gb.group_norm(x, gamma, beta, 2, 1e-5).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[4, 2, 8, 8], 5);
    run_case(
        "group_norm",
        Case {
            inputs: vec![(x, rand_input(&[4, 2, 8, 8], 15)), proj],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn cross_attention() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[4, 2, 8, 8]).unwrap();
    let ctx = gb.input("ctx", &[3, 1, 4, 4]).unwrap();
    let wq = gb.param("wq", &[5, 4], Init::Normal(0.4)).unwrap();
    let wk = gb.param("wk", &[5, 3], Init::Normal(0.4)).unwrap();
    let wv = gb.param("wv", &[5, 3], Init::Normal(0.4)).unwrap();
    let wo = gb.param("wo", &[4, 5], Init::Normal(0.4)).unwrap();
    let y = gb.cross_attn(x, ctx, wq, wk, wv, wo).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[4, 2, 8, 8], 6);
    run_case(
        "cross_attention",
        Case {
            inputs: vec![
                (x, rand_input(&[4, 2, 8, 8], 16)),
                (ctx, rand_input(&[3, 1, 4, 4], 17)),
                proj,
            ],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn film_modulation() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[3, 2, 8, 8]).unwrap();
    let cond_in = gb.input("cond_in", &[4]).unwrap();
    let w = gb.param("w", &[6, 4], Init::Normal(0.5)).unwrap();
    let b = gb.param("b", &[6], Init::Normal(0.2)).unwrap();
    let cond = gb.linear(cond_in, w, Some(b)).unwrap();
    let y = gb.film(x, cond).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[3, 2, 8, 8], 7);
    run_case(
        "film",
        Case {
            inputs: vec![
                (x, rand_input(&[3, 2, 8, 8], 18)),
                (cond_in, rand_input(&[4], 19)),
                proj,
            ],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn silu_groupnorm_residual_block() {
    // A composite like the denoiser's resolution blocks.
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[4, 2, 8, 8]).unwrap();
    let gamma = gb.param("gamma", &[4], Init::Ones).unwrap();
    let beta = gb.param("beta", &[4], Init::Zeros).unwrap();
    let n = gb.group_norm(x, gamma, beta, 2, 1e-5).unwrap();
    let a = gb.silu(n);
    let w = gb.param("w", &[4, 4, 1, 3, 3], Init::Normal(0.3)).unwrap();
    let c = gb.conv(a, w, None, (1, 1), (0, 1, 1)).unwrap();
    let y = gb.add(x, c).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[4, 2, 8, 8], 8);
    run_case(
        "residual_block",
        Case {
            inputs: vec![(x, rand_input(&[4, 2, 8, 8], 20)), proj],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn upsample_concat_slice_exp_path() {
    // Exercises the VAE-style plumbing ops in one graph.
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[4, 2, 4, 4]).unwrap();
    let up = gb.upsample2x(x).unwrap();
    let lo = gb.slice0(up, 0, 2).unwrap();
    let hi = gb.slice0(up, 2, 4).unwrap();
    let e = gb.exp(lo);
    let cat = gb.concat0(e, hi).unwrap();
    let sq = gb.square(cat);
    let y = gb.affine(sq, 0.5, -0.25);
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[4, 2, 8, 8], 9);
    run_case(
        "vae_plumbing",
        Case {
            inputs: vec![(x, rand_input(&[4, 2, 4, 4], 21)), proj],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn global_mean_linear_head() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[4, 2, 8, 8]).unwrap();
    let pooled = gb.global_mean(x).unwrap();
    let w = gb.param("w", &[3, 4], Init::Normal(0.5)).unwrap();
    let b = gb.param("b", &[3], Init::Normal(0.2)).unwrap();
    let y = gb.linear(pooled, w, Some(b)).unwrap();
    let (loss, proj) = projected_loss_with_shape(&mut gb, y, &[3], 10);
    run_case(
        "global_mean_linear",
        Case {
            inputs: vec![(x, rand_input(&[4, 2, 8, 8], 22)), proj],
            graph: gb.build(),
            loss,
        },
    );
}

#[test]
fn mean_all_reduction() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[3, 1, 8, 8]).unwrap();
    let sq = gb.square(x);
    let loss = gb.mean_all(sq);
    run_case(
        "mean_all",
        Case {
            inputs: vec![(x, rand_input(&[3, 1, 8, 8], 23))],
            graph: gb.build(),
            loss,
        },
    );
}
