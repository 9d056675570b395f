//! Single-head scaled dot-product cross-attention over flattened spatial
//! positions, one attention map per frame against a shared context image.

use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
pub struct AttnDims {
    /// Query channels.
    pub c: usize,
    pub t: usize,
    /// Query positions per frame (h * w).
    pub n: usize,
    /// Context channels.
    pub ck: usize,
    /// Context positions (hk * wk).
    pub m: usize,
    /// Attention dimension.
    pub d: usize,
}

impl AttnDims {
    pub fn from_shapes(xs: &[usize], cs: &[usize], wq: &[usize]) -> Self {
        AttnDims {
            c: xs[0],
            t: xs[1],
            n: xs[2] * xs[3],
            ck: cs[0],
            m: cs[2] * cs[3],
            d: wq[0],
        }
    }
}

/// `out[m][n] += a[m][k] * b[k][n]` dense row-major.
fn matmul_acc<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in a_row.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let b_row = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

/// `out[m][n] += a[k][m]^T * b[k][n]`.
fn matmul_tn_acc<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for kk in 0..k {
        let a_row = &a[kk * m..(kk + 1) * m];
        let b_row = &b[kk * n..(kk + 1) * n];
        for (i, &av) in a_row.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let out_row = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

/// `out[m][n] += a[m][k] * b[n][k]^T`.
fn matmul_nt_acc<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (j, o) in out_row.iter_mut().enumerate() {
            let b_row = &b[j * k..(j + 1) * k];
            *o += dot8(a_row, b_row);
        }
    }
}

/// Fixed-lane unrolled dot product; same layout as the convolution kernel's.
#[inline]
fn dot8<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::zero(); 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (av, bv) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for l in 0..8 {
            lanes[l] += av[l] * bv[l];
        }
    }
    let mut tail = T::zero();
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    let q0 = (lanes[0] + lanes[4]) + (lanes[2] + lanes[6]);
    let q1 = (lanes[1] + lanes[5]) + (lanes[3] + lanes[7]);
    (q0 + q1) + tail
}

fn softmax_rows<T: Scalar>(s: &mut [T], rows: usize, cols: usize) {
    for r in 0..rows {
        let row = &mut s[r * cols..(r + 1) * cols];
        let mut max = row[0];
        for &v in row.iter() {
            if v > max {
                max = v;
            }
        }
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let inv = T::one() / sum;
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
}

/// Auxiliary forward products cached for the backward pass.
pub struct AttnAux<T> {
    /// `[d, m]`
    pub k: Tensor<T>,
    /// `[d, m]`
    pub v: Tensor<T>,
    /// `[t, d, n]`
    pub q: Tensor<T>,
    /// `[t, n, m]` softmax rows.
    pub a: Tensor<T>,
    /// `[t, d, n]` attention outputs before the output projection.
    pub o: Tensor<T>,
}

#[allow(clippy::too_many_arguments)]
pub fn forward<T: Scalar>(
    dm: &AttnDims,
    x: &[T],
    ctx: &[T],
    wq: &[T],
    wk: &[T],
    wv: &[T],
    wo: &[T],
    out: &mut [T],
    parallel: bool,
) -> AttnAux<T> {
    let (c, t, n, ck, m, d) = (dm.c, dm.t, dm.n, dm.ck, dm.m, dm.d);
    let scale = T::cast(1.0 / (d as f64).sqrt());

    // K = wk @ ctx, V = wv @ ctx, shared by all frames.
    let mut k_mat = Tensor::zeros(&[d, m]);
    let mut v_mat = Tensor::zeros(&[d, m]);
    matmul_acc(wk, ctx, d, ck, m, k_mat.data_mut());
    matmul_acc(wv, ctx, d, ck, m, v_mat.data_mut());

    let mut q_all = Tensor::zeros(&[t, d, n]);
    let mut a_all = Tensor::zeros(&[t, n, m]);
    let mut o_all = Tensor::zeros(&[t, d, n]);

    // x is [c, t, n] with stride t*n per channel; gather the frame into a
    // contiguous [c, n] scratch before the projections.
    let frame_task = |ti: usize, q_t: &mut [T], a_t: &mut [T], o_t: &mut [T], out_t: &mut [T]| {
        let mut x_t = vec![T::zero(); c * n];
        for cc in 0..c {
            x_t[cc * n..(cc + 1) * n].copy_from_slice(&x[(cc * t + ti) * n..][..n]);
        }
        // Q = wq @ x_t : [d, n]
        matmul_acc(wq, &x_t, d, c, n, q_t);
        // S = scale * Q^T K : [n, m]
        matmul_tn_acc(q_t, k_mat.data(), n, d, m, a_t);
        a_t.iter_mut().for_each(|v| *v *= scale);
        softmax_rows(a_t, n, m);
        // O = V A^T : [d, n]
        matmul_nt_acc(v_mat.data(), a_t, d, m, n, o_t);
        // y_t = wo @ O : [c, n]
        let mut y_t = vec![T::zero(); c * n];
        matmul_acc(wo, o_t, c, d, n, &mut y_t);
        out_t.copy_from_slice(&y_t);
    };

    // Scatter per-frame outputs back into [c, t, n] layout afterwards.
    let mut out_frames = vec![T::zero(); t * c * n];
    {
        let q_chunks = q_all.data_mut().chunks_mut(d * n);
        let a_chunks = a_all.data_mut().chunks_mut(n * m);
        let o_chunks = o_all.data_mut().chunks_mut(d * n);
        let y_chunks = out_frames.chunks_mut(c * n);
        let work: Vec<(usize, (&mut [T], (&mut [T], (&mut [T], &mut [T]))))> = q_chunks
            .zip(a_chunks.zip(o_chunks.zip(y_chunks)))
            .enumerate()
            .collect();
        if parallel {
            work.into_par_iter()
                .for_each(|(ti, (q_t, (a_t, (o_t, out_t))))| frame_task(ti, q_t, a_t, o_t, out_t));
        } else {
            work.into_iter()
                .for_each(|(ti, (q_t, (a_t, (o_t, out_t))))| frame_task(ti, q_t, a_t, o_t, out_t));
        }
    }
    for cc in 0..c {
        for ti in 0..t {
            out[(cc * t + ti) * n..][..n].copy_from_slice(&out_frames[(ti * c + cc) * n..][..n]);
        }
    }

    AttnAux {
        k: k_mat,
        v: v_mat,
        q: q_all,
        a: a_all,
        o: o_all,
    }
}

pub struct AttnGrads<T> {
    pub dx: Vec<T>,
    pub dctx: Vec<T>,
    pub dwq: Vec<T>,
    pub dwk: Vec<T>,
    pub dwv: Vec<T>,
    pub dwo: Vec<T>,
}

#[allow(clippy::too_many_arguments)]
pub fn backward<T: Scalar>(
    dm: &AttnDims,
    x: &[T],
    ctx: &[T],
    wq: &[T],
    wk: &[T],
    wv: &[T],
    wo: &[T],
    aux: &AttnAux<T>,
    dout: &[T],
    parallel: bool,
) -> AttnGrads<T> {
    let (c, t, n, ck, m, d) = (dm.c, dm.t, dm.n, dm.ck, dm.m, dm.d);
    let scale = T::cast(1.0 / (d as f64).sqrt());

    struct Partial<T> {
        dx_t: Vec<T>,
        dk: Vec<T>,
        dv: Vec<T>,
        dwq: Vec<T>,
        dwo: Vec<T>,
    }

    let per_frame = |ti: usize| -> Partial<T> {
        let q_t = &aux.q.data()[ti * d * n..][..d * n];
        let a_t = &aux.a.data()[ti * n * m..][..n * m];
        let mut x_t = vec![T::zero(); c * n];
        let mut dy_t = vec![T::zero(); c * n];
        for cc in 0..c {
            x_t[cc * n..(cc + 1) * n].copy_from_slice(&x[(cc * t + ti) * n..][..n]);
            dy_t[cc * n..(cc + 1) * n].copy_from_slice(&dout[(cc * t + ti) * n..][..n]);
        }
        let o_t = &aux.o.data()[ti * d * n..][..d * n];
        // dwo += dy O^T : [c, d]
        let mut dwo = vec![T::zero(); c * d];
        matmul_nt_acc(&dy_t, o_t, c, n, d, &mut dwo);
        // dO = wo^T dy : [d, n]
        let mut do_t = vec![T::zero(); d * n];
        matmul_tn_acc(wo, &dy_t, d, c, n, &mut do_t);
        // dV += dO A : [d, m]
        let mut dv = vec![T::zero(); d * m];
        matmul_acc(&do_t, a_t, d, n, m, &mut dv);
        // dA = dO^T V : [n, m]
        let mut da = vec![T::zero(); n * m];
        matmul_tn_acc(&do_t, aux.v.data(), n, d, m, &mut da);
        // Softmax backward per row: dS = A * (dA - rowdot(A, dA)), then scale.
        let mut ds = vec![T::zero(); n * m];
        for r in 0..n {
            let a_row = &a_t[r * m..(r + 1) * m];
            let da_row = &da[r * m..(r + 1) * m];
            let mut dot = T::zero();
            for (&av, &dv_) in a_row.iter().zip(da_row) {
                dot += av * dv_;
            }
            let ds_row = &mut ds[r * m..(r + 1) * m];
            for ((dsv, &av), &dav) in ds_row.iter_mut().zip(a_row).zip(da_row) {
                *dsv = av * (dav - dot) * scale;
            }
        }
        // dQ = K dS^T : [d, n]; dK += Q dS : [d, m]
        let mut dq = vec![T::zero(); d * n];
        matmul_nt_acc(aux.k.data(), &ds, d, m, n, &mut dq);
        let mut dk = vec![T::zero(); d * m];
        matmul_acc(q_t, &ds, d, n, m, &mut dk);
        // dwq += dQ x_t^T : [d, c]; dx_t = wq^T dQ : [c, n]
        let mut dwq = vec![T::zero(); d * c];
        matmul_nt_acc(&dq, &x_t, d, n, c, &mut dwq);
        let mut dx_t = vec![T::zero(); c * n];
        matmul_tn_acc(wq, &dq, c, d, n, &mut dx_t);
        Partial {
            dx_t,
            dk,
            dv,
            dwq,
            dwo,
        }
    };

    let partials: Vec<Partial<T>> = if parallel {
        (0..t).into_par_iter().map(per_frame).collect()
    } else {
        (0..t).map(per_frame).collect()
    };

    // Fixed-order reduction keeps results independent of thread scheduling.
    let mut dx = vec![T::zero(); c * t * n];
    let mut dk = vec![T::zero(); d * m];
    let mut dv = vec![T::zero(); d * m];
    let mut dwq = vec![T::zero(); d * c];
    let mut dwo = vec![T::zero(); c * d];
    for (ti, p) in partials.iter().enumerate() {
        for cc in 0..c {
            let dst = &mut dx[(cc * t + ti) * n..][..n];
            let src = &p.dx_t[cc * n..(cc + 1) * n];
            for (a, &b) in dst.iter_mut().zip(src) {
                *a += b;
            }
        }
        for (a, &b) in dk.iter_mut().zip(&p.dk) {
            *a += b;
        }
        for (a, &b) in dv.iter_mut().zip(&p.dv) {
            *a += b;
        }
        for (a, &b) in dwq.iter_mut().zip(&p.dwq) {
            *a += b;
        }
        for (a, &b) in dwo.iter_mut().zip(&p.dwo) {
            *a += b;
        }
    }

    // Context path: dwk += dK ctx^T, dwv += dV ctx^T,
    // dctx = wk^T dK + wv^T dV.
    let mut dwk = vec![T::zero(); d * ck];
    let mut dwv = vec![T::zero(); d * ck];
    matmul_nt_acc(&dk, ctx, d, m, ck, &mut dwk);
    matmul_nt_acc(&dv, ctx, d, m, ck, &mut dwv);
    let mut dctx = vec![T::zero(); ck * m];
    matmul_tn_acc(wk, &dk, ck, d, m, &mut dctx);
    matmul_tn_acc(wv, &dv, ck, d, m, &mut dctx);

    AttnGrads {
        dx,
        dctx,
        dwq,
        dwk,
        dwv,
        dwo,
    }
}
