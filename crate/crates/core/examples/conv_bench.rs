// Temporary sizing bench for training-architecture decisions.
use std::time::Instant;
use strata_core::graph::GraphBuilder;
use strata_core::params::{init_params, Init, ParamSet};
use strata_core::rng::seed_stream;
use strata_core::tensor::Tensor;
use strata_core::Workspace;

fn main() {
    // Denoiser-like stack at 32x32 latent, 8 frames.
    let mut gb = GraphBuilder::new();
    let x = gb.input("x", &[12, 8, 32, 32]).unwrap();
    let wf = gb.param("wf", &[16, 12, 3, 3, 3], Init::Normal(0.1)).unwrap();
    let h = gb.conv(x, wf, None, (1, 1), (1, 1, 1)).unwrap(); // fusion 42M
    let w1 = gb.param("w1", &[16, 16, 1, 3, 3], Init::Normal(0.1)).unwrap();
    let h1 = gb.conv(h, w1, None, (1, 1), (0, 1, 1)).unwrap(); // 19M
    let wt = gb.param("wt", &[16, 16, 3, 1, 1], Init::Normal(0.1)).unwrap();
    let h2 = gb.conv(h1, wt, None, (1, 1), (1, 0, 0)).unwrap(); // 6.3M
    let wd = gb.param("wd", &[32, 16, 1, 3, 3], Init::Normal(0.1)).unwrap();
    let h3 = gb.conv(h2, wd, None, (2, 2), (0, 1, 1)).unwrap(); // 9.4M @16
    let w2 = gb.param("w2", &[32, 32, 1, 3, 3], Init::Normal(0.1)).unwrap();
    let h4 = gb.conv(h3, w2, None, (1, 1), (0, 1, 1)).unwrap(); // 19M
    let loss = {
        let sq = gb.square(h4);
        gb.sum_all(sq)
    };
    let graph = gb.build();
    let params: ParamSet<f32> = init_params(&graph, 1);
    let mut rng = seed_stream(1, "x", 0);
    let input = Tensor::<f32>::randn(&[12, 8, 32, 32], &mut rng);

    // forward MACs ~ 42.5 + 19 + 6.3 + 9.4 + 19 = 96.2 M
    let fwd_mac = 96.2e6_f64;

    for parallel in [false, true] {
        let mut ws = Workspace::new(&graph).with_parallel(parallel);
        ws.bind(x, input.clone()).unwrap();
        ws.forward(&params, loss).unwrap(); // warm
        let t0 = Instant::now();
        let iters = 10;
        for _ in 0..iters {
            ws.bind(x, input.clone()).unwrap();
            ws.forward(&params, loss).unwrap();
        }
        let fwd = t0.elapsed().as_secs_f64() / iters as f64;
        let t1 = Instant::now();
        for _ in 0..iters {
            ws.bind(x, input.clone()).unwrap();
            ws.forward(&params, loss).unwrap();
            ws.backward(loss).unwrap();
        }
        let both = t1.elapsed().as_secs_f64() / iters as f64;
        println!(
            "parallel={parallel}: fwd {:.1} ms ({:.2} GMAC/s), fwd+bwd {:.1} ms ({:.2} GMAC/s equiv)",
            fwd * 1e3,
            fwd_mac / fwd / 1e9,
            both * 1e3,
            3.0 * fwd_mac / both / 1e9,
        );
    }
}
