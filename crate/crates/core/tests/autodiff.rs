//! Forward/backward behaviour on hand-computable cases, determinism, and
//! gradient linearity.

use strata_core::graph::GraphBuilder;
use strata_core::params::{init_params, Init, ParamSet};
use strata_core::rng::seed_stream;
use strata_core::tensor::Tensor;
use strata_core::{CoreError, Workspace};

#[test]
fn conv_identity_kernel_preserves_image() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[1, 1, 5, 5]).unwrap();
    let w = gb.param("w", &[1, 1, 1, 1, 1], Init::Ones).unwrap();
    let y = gb.conv(x, w, None, (1, 1), (0, 0, 0)).unwrap();
    let graph = gb.build();
    let params: ParamSet<f64> = init_params(&graph, 0);

    let mut ws = Workspace::new(&graph);
    let img = Tensor::from_fn(&[1, 1, 5, 5], |i| i as f64 * 0.3 - 2.0);
    ws.bind(x, img.clone()).unwrap();
    let out = ws.forward(&params, y).unwrap();
    assert_eq!(out.data(), img.data());
}

#[test]
fn add_zero_is_identity() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[2, 1, 3, 3]).unwrap();
    let z = gb.input("z", &[2, 1, 3, 3]).unwrap();
    let y = gb.add(x, z).unwrap();
    let graph = gb.build();
    let params: ParamSet<f64> = ParamSet::new();

    let mut ws = Workspace::new(&graph);
    let img = Tensor::from_fn(&[2, 1, 3, 3], |i| (i as f64).sin());
    ws.bind(x, img.clone()).unwrap();
    ws.bind(z, Tensor::zeros(&[2, 1, 3, 3])).unwrap();
    let out = ws.forward(&params, y).unwrap();
    assert_eq!(out.data(), img.data());
}

#[test]
fn conv_all_ones_window_sums_to_nine() {
    // 3x3 kernel of ones over a 5x5 image of ones, no padding: the centre
    // output element is the hand sum of a full 3x3 window.
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[1, 1, 5, 5]).unwrap();
    let w = gb.param("w", &[1, 1, 1, 3, 3], Init::Ones).unwrap();
    let y = gb.conv(x, w, None, (1, 1), (0, 0, 0)).unwrap();
    let graph = gb.build();
    let params: ParamSet<f64> = init_params(&graph, 0);

    let mut ws = Workspace::new(&graph);
    ws.bind(x, Tensor::full(&[1, 1, 5, 5], 1.0)).unwrap();
    let out = ws.forward(&params, y).unwrap();
    assert_eq!(out.shape(), &[1, 1, 3, 3]);
    assert_eq!(out.data()[4], 9.0);
}

#[test]
fn backward_of_sum_is_ones() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[2, 1, 2, 2]).unwrap();
    let loss = gb.sum_all(x);
    let graph = gb.build();
    let params: ParamSet<f64> = ParamSet::new();

    let mut ws = Workspace::new(&graph);
    let img = Tensor::from_fn(&[2, 1, 2, 2], |i| i as f64).with_requires_grad(true);
    ws.bind(x, img).unwrap();
    ws.forward(&params, loss).unwrap();
    ws.backward(loss).unwrap();
    assert_eq!(ws.grad(x).unwrap().data(), &[1.0; 8]);
}

#[test]
fn backward_of_sum_of_squares_is_two_x() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[1]).unwrap();
    let sq = gb.square(x);
    let loss = gb.sum_all(sq);
    let graph = gb.build();
    let params: ParamSet<f64> = ParamSet::new();

    let mut ws = Workspace::new(&graph);
    ws.bind(x, Tensor::scalar(3.0).with_requires_grad(true))
        .unwrap();
    ws.forward(&params, loss).unwrap();
    ws.backward(loss).unwrap();
    assert_eq!(ws.grad(x).unwrap().item(), 6.0);
}

#[test]
fn backward_before_forward_is_an_error() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[1]).unwrap();
    let loss = gb.sum_all(x);
    let graph = gb.build();
    let mut ws = Workspace::<f64>::new(&graph);
    let err = ws.backward(loss).unwrap_err();
    assert!(matches!(err, CoreError::BackwardBeforeForward { .. }));
}

#[test]
fn non_scalar_loss_is_an_error() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[4]).unwrap();
    let y = gb.square(x);
    let graph = gb.build();
    let params: ParamSet<f64> = ParamSet::new();
    let mut ws = Workspace::new(&graph);
    ws.bind(x, Tensor::zeros(&[4])).unwrap();
    ws.forward(&params, y).unwrap();
    let err = ws.backward(y).unwrap_err();
    assert!(matches!(err, CoreError::NonScalarLoss { .. }));
}

#[test]
fn build_errors_name_the_offending_node() {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[3, 1, 4, 4]).unwrap();
    let w = gb.param("w", &[2, 5, 1, 3, 3], Init::Zeros).unwrap();
    let err = gb.conv(x, w, None, (1, 1), (0, 1, 1)).unwrap_err();
    match err {
        CoreError::ShapeMismatch { node, reason } => {
            assert!(node.starts_with("conv"), "{node}");
            assert!(reason.contains("input channels"), "{reason}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

fn small_graph() -> (strata_core::Graph, strata_core::NodeId, strata_core::NodeId) {
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[2, 2, 6, 6]).unwrap();
    let w = gb.param("w", &[2, 2, 1, 3, 3], Init::Normal(0.5)).unwrap();
    let b = gb.param("b", &[2], Init::Normal(0.2)).unwrap();
    let c = gb.conv(x, w, Some(b), (1, 1), (0, 1, 1)).unwrap();
    let s = gb.silu(c);
    let sq = gb.square(s);
    let loss = gb.sum_all(sq);
    (gb.build(), x, loss)
}

#[test]
fn forward_backward_deterministic_and_parallel_matches_serial() {
    let (graph, x, loss) = small_graph();
    let params: ParamSet<f32> = init_params(&graph, 42);
    let mut rng = seed_stream(42, "x", 0);
    let input = Tensor::<f32>::randn(&[2, 2, 6, 6], &mut rng).with_requires_grad(true);

    let run = |parallel: bool| {
        let mut ws = Workspace::new(&graph).with_parallel(parallel);
        ws.bind(x, input.clone()).unwrap();
        let out = ws.forward(&params, loss).unwrap().clone();
        ws.backward(loss).unwrap();
        (out, ws.grad(x).unwrap().clone())
    };

    let (o1, g1) = run(false);
    let (o2, g2) = run(false);
    let (o3, g3) = run(true);
    assert_eq!(o1.data(), o2.data());
    assert_eq!(g1.data(), g2.data());
    assert_eq!(o1.data(), o3.data());
    assert_eq!(g1.data(), g3.data());
}

#[test]
fn gradients_scale_linearly_with_loss_scale() {
    // Scaling the loss by a scales every gradient by a, to 1e-12 at 64-bit.
    let (graph, x, _) = small_graph();

    for &a in &[2.0_f64, -0.75, 13.5, 1e-3] {
        let mut gb = GraphBuilder::new();
        let xi = gb.input("x", &[2, 2, 6, 6]).unwrap();
        let w = gb.param("w", &[2, 2, 1, 3, 3], Init::Normal(0.5)).unwrap();
        let b = gb.param("b", &[2], Init::Normal(0.2)).unwrap();
        let c = gb.conv(xi, w, Some(b), (1, 1), (0, 1, 1)).unwrap();
        let s = gb.silu(c);
        let sq = gb.square(s);
        let base = gb.sum_all(sq);
        let scaled = gb.affine(base, a, 0.0);
        let g2 = gb.build();
        let params: ParamSet<f64> = init_params(&g2, 42);
        let mut rng = seed_stream(42, "x", 0);
        let input = Tensor::<f64>::randn(&[2, 2, 6, 6], &mut rng).with_requires_grad(true);

        let grad_of = |loss_node| {
            let mut ws = Workspace::new(&g2);
            ws.bind(xi, input.clone()).unwrap();
            ws.forward(&params, loss_node).unwrap();
            ws.backward(loss_node).unwrap();
            ws.grad(xi).unwrap().clone()
        };
        let g_base = grad_of(base);
        let g_scaled = grad_of(scaled);
        for (gb_, gs) in g_base.data().iter().zip(g_scaled.data()) {
            let expect = gb_ * a;
            assert!(
                (gs - expect).abs() <= 1e-12 * expect.abs().max(1.0),
                "a={a}: {gs} vs {expect}"
            );
        }
    }
    let _ = (graph, x);
}
