//! Brute-force coverage/z-order oracle for the rasterizer.
//!
//! The oracle is an independent path: it solves for barycentric coordinates
//! with Cramer's rule at every pixel centre of every candidate triangle and
//! keeps the nearest interpolated depth, instead of edge functions with a
//! fill rule. On random triangles (no exact edge hits) both must agree on
//! coverage exactly and on interpolated values to 1e-6.

use rand::Rng;
use strata_core::rng::seed_stream;
use strata_geom::raster::{rasterize_mesh, RasterTarget, ScreenVertex};

const SIZE: usize = 64;

#[derive(Clone, Copy)]
struct Tri {
    p: [[f64; 2]; 3],
    depth: [f64; 3],
    /// One attribute row per vertex.
    attr: [f64; 3],
}

/// Barycentric coordinates of `q` via Cramer's rule.
fn barycentric(t: &Tri, q: [f64; 2]) -> Option<[f64; 3]> {
    let [a, b, c] = t.p;
    let m00 = b[0] - a[0];
    let m01 = c[0] - a[0];
    let m10 = b[1] - a[1];
    let m11 = c[1] - a[1];
    let det = m00 * m11 - m01 * m10;
    if det.abs() < 1e-12 {
        return None;
    }
    let rx = q[0] - a[0];
    let ry = q[1] - a[1];
    let l1 = (rx * m11 - m01 * ry) / det;
    let l2 = (m00 * ry - rx * m10) / det;
    Some([1.0 - l1 - l2, l1, l2])
}

/// Full-scan reference rasterization of a triangle set.
fn oracle(tris: &[Tri]) -> (Vec<bool>, Vec<f64>, Vec<f64>) {
    let mut covered = vec![false; SIZE * SIZE];
    let mut depth = vec![f64::INFINITY; SIZE * SIZE];
    let mut value = vec![0.0; SIZE * SIZE];
    for py in 0..SIZE {
        for px in 0..SIZE {
            let q = [px as f64 + 0.5, py as f64 + 0.5];
            for t in tris {
                let Some(l) = barycentric(t, q) else { continue };
                if l.iter().any(|&v| v <= 0.0) {
                    continue; // strict interior; random coords never tie
                }
                let z = l[0] * t.depth[0] + l[1] * t.depth[1] + l[2] * t.depth[2];
                let i = py * SIZE + px;
                if z < depth[i] {
                    depth[i] = z;
                    covered[i] = true;
                    value[i] = l[0] * t.attr[0] + l[1] * t.attr[1] + l[2] * t.attr[2];
                }
            }
        }
    }
    (covered, depth, value)
}

fn run_impl(tris: &[Tri]) -> RasterTarget<f64> {
    let mut target = RasterTarget::new(SIZE, SIZE, 1);
    for (ti, t) in tris.iter().enumerate() {
        let verts: Vec<ScreenVertex<f64>> = (0..3)
            .map(|i| ScreenVertex {
                x: t.p[i][0],
                y: t.p[i][1],
                depth: t.depth[i],
                valid: true,
            })
            .collect();
        rasterize_mesh(&mut target, &verts, &[[0, 1, 2]], &t.attr, ti as i32);
    }
    target
}

fn random_tri(rng: &mut impl Rng) -> Tri {
    Tri {
        p: [
            [rng.gen_range(-8.0..72.0), rng.gen_range(-8.0..72.0)],
            [rng.gen_range(-8.0..72.0), rng.gen_range(-8.0..72.0)],
            [rng.gen_range(-8.0..72.0), rng.gen_range(-8.0..72.0)],
        ],
        depth: [
            rng.gen_range(0.5..10.0),
            rng.gen_range(0.5..10.0),
            rng.gen_range(0.5..10.0),
        ],
        attr: [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ],
    }
}

#[test]
fn coverage_matches_brute_force_on_1000_random_triangles() {
    let mut rng = seed_stream(2024, "raster-oracle", 0);
    let mut pixels_checked = 0usize;
    for _ in 0..1000 {
        let tri = random_tri(&mut rng);
        let (covered, _, value) = oracle(std::slice::from_ref(&tri));
        let target = run_impl(std::slice::from_ref(&tri));
        for i in 0..SIZE * SIZE {
            assert_eq!(
                target.object[i] >= 0,
                covered[i],
                "coverage mismatch at pixel {i} for {:?} {:?} {:?}",
                tri.p[0],
                tri.p[1],
                tri.p[2]
            );
            if covered[i] {
                pixels_checked += 1;
                assert!(
                    (target.attr[i] - value[i]).abs() < 1e-6,
                    "value mismatch at {i}: {} vs {}",
                    target.attr[i],
                    value[i]
                );
            }
        }
    }
    assert!(pixels_checked > 100_000, "sampled {pixels_checked} covered pixels");
}

#[test]
fn z_order_matches_brute_force_on_overlapping_pairs() {
    let mut rng = seed_stream(2024, "raster-oracle-z", 0);
    for _ in 0..200 {
        let pair = [random_tri(&mut rng), random_tri(&mut rng)];
        let (covered, depth, value) = oracle(&pair);
        let target = run_impl(&pair);
        for i in 0..SIZE * SIZE {
            assert_eq!(target.object[i] >= 0, covered[i]);
            if covered[i] {
                assert!((target.depth[i] - depth[i]).abs() < 1e-6);
                assert!((target.attr[i] - value[i]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn exact_shared_edges_follow_the_top_left_rule() {
    // Two squares side by side, each split along its diagonal, with all
    // vertices on half-integer coordinates: pixel centres land exactly on
    // the shared diagonal, the shared vertical edge, and the outer borders.
    // The top-left rule must assign every such pixel to exactly one
    // triangle, with no gaps inside the union.
    let quads = [
        Tri { p: [[1.5, 1.5], [9.5, 1.5], [1.5, 9.5]], depth: [1.0; 3], attr: [1.0; 3] },
        Tri { p: [[9.5, 1.5], [9.5, 9.5], [1.5, 9.5]], depth: [1.0; 3], attr: [1.0; 3] },
        Tri { p: [[9.5, 1.5], [17.5, 1.5], [9.5, 9.5]], depth: [1.0; 3], attr: [1.0; 3] },
        Tri { p: [[17.5, 1.5], [17.5, 9.5], [9.5, 9.5]], depth: [1.0; 3], attr: [1.0; 3] },
    ];
    // Rasterize each triangle into its own target so double-coverage cannot
    // hide behind the depth test.
    let coverages: Vec<Vec<bool>> = quads
        .iter()
        .map(|t| {
            let target = run_impl(std::slice::from_ref(t));
            target.object.iter().map(|&o| o >= 0).collect()
        })
        .collect();
    for i in 0..SIZE * SIZE {
        let count = coverages.iter().filter(|c| c[i]).count();
        let (px, py) = (i % SIZE, i / SIZE);
        // Union is the block of pixel centres in [1.5, 17.5) x [1.5, 9.5):
        // top and left borders inclusive, bottom and right exclusive.
        let cx = px as f64 + 0.5;
        let cy = py as f64 + 0.5;
        let inside = (1.5..17.5).contains(&cx) && (1.5..9.5).contains(&cy);
        assert_eq!(
            count,
            usize::from(inside),
            "pixel ({px},{py}) covered {count} times"
        );
    }
}
