//! Elementwise ops, reshuffles, and reductions.

use crate::scalar::Scalar;

pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

pub fn silu_forward<T: Scalar>(x: &[T], out: &mut [T]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = v * sigmoid(v);
    }
}

pub fn silu_backward<T: Scalar>(x: &[T], dout: &[T], dx: &mut [T]) {
    for ((g, &v), &dy) in dx.iter_mut().zip(x).zip(dout) {
        let s = sigmoid(v);
        *g += dy * s * (T::one() + v * (T::one() - s));
    }
}

/// `x * (1 + scale_c) + shift_c` with `cond = [scale; shift]` of length 2c.
pub fn film_forward<T: Scalar>(x: &[T], cond: &[T], c: usize, out: &mut [T]) {
    let plane = x.len() / c;
    for ch in 0..c {
        let s = T::one() + cond[ch];
        let b = cond[c + ch];
        let xs = &x[ch * plane..(ch + 1) * plane];
        let os = &mut out[ch * plane..(ch + 1) * plane];
        for (o, &v) in os.iter_mut().zip(xs) {
            *o = v * s + b;
        }
    }
}

pub fn film_backward<T: Scalar>(
    x: &[T],
    cond: &[T],
    c: usize,
    dout: &[T],
    dx: &mut [T],
    dcond: &mut [T],
) {
    let plane = x.len() / c;
    for ch in 0..c {
        let s = T::one() + cond[ch];
        let xs = &x[ch * plane..(ch + 1) * plane];
        let dys = &dout[ch * plane..(ch + 1) * plane];
        let dxs = &mut dx[ch * plane..(ch + 1) * plane];
        let mut ds = T::zero();
        let mut db = T::zero();
        for ((g, &v), &dy) in dxs.iter_mut().zip(xs).zip(dys) {
            *g += dy * s;
            ds += dy * v;
            db += dy;
        }
        dcond[ch] += ds;
        dcond[c + ch] += db;
    }
}

/// Nearest-neighbour 2x upsampling of `[c, t, h, w]`.
pub fn upsample2x_forward<T: Scalar>(x: &[T], c: usize, t: usize, h: usize, w: usize, out: &mut [T]) {
    let (ho, wo) = (h * 2, w * 2);
    for p in 0..c * t {
        let src = &x[p * h * w..][..h * w];
        let dst = &mut out[p * ho * wo..][..ho * wo];
        for y in 0..ho {
            let sy = y / 2;
            let src_row = &src[sy * w..][..w];
            let dst_row = &mut dst[y * wo..][..wo];
            for (xo, d) in dst_row.iter_mut().enumerate() {
                *d = src_row[xo / 2];
            }
        }
    }
}

pub fn upsample2x_backward<T: Scalar>(dout: &[T], c: usize, t: usize, h: usize, w: usize, dx: &mut [T]) {
    let (ho, wo) = (h * 2, w * 2);
    for p in 0..c * t {
        let dst = &mut dx[p * h * w..][..h * w];
        let src = &dout[p * ho * wo..][..ho * wo];
        for y in 0..ho {
            let sy = y / 2;
            let src_row = &src[y * wo..][..wo];
            let dst_row = &mut dst[sy * w..][..w];
            for (xo, &g) in src_row.iter().enumerate() {
                dst_row[xo / 2] += g;
            }
        }
    }
}
