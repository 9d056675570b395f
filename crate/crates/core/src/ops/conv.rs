//! Direct convolution over `[c, t, h, w]` tensors.
//!
//! One kernel covers per-frame 2D convolution (kt = 1), temporal mixing
//! (kh = kw = 1), and spatio-temporal fusion (3x3x3). Loops are arranged so
//! each output plane is produced by one task with a fixed accumulation
//! order: results are bit-identical in serial and parallel mode.

use crate::scalar::Scalar;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug)]
pub struct ConvDims {
    pub ic: usize,
    pub t: usize,
    pub hi: usize,
    pub wi: usize,
    pub oc: usize,
    pub kt: usize,
    pub kh: usize,
    pub kw: usize,
    pub ho: usize,
    pub wo: usize,
    pub sh: usize,
    pub sw: usize,
    pub pt: usize,
    pub ph: usize,
    pub pw: usize,
}

impl ConvDims {
    pub fn from_shapes(xs: &[usize], ws: &[usize], stride: (usize, usize), pad: (usize, usize, usize)) -> Self {
        let (sh, sw) = stride;
        let (pt, ph, pw) = pad;
        let d = ConvDims {
            ic: xs[0],
            t: xs[1],
            hi: xs[2],
            wi: xs[3],
            oc: ws[0],
            kt: ws[2],
            kh: ws[3],
            kw: ws[4],
            ho: (xs[2] + 2 * ph - ws[3]) / sh + 1,
            wo: (xs[3] + 2 * pw - ws[4]) / sw + 1,
            sh,
            sw,
            pt,
            ph,
            pw,
        };
        debug_assert_eq!(ws[1], d.ic);
        d
    }
}

/// Output coordinate range `[lo, hi)` for which `o*stride + k - pad` lands in
/// `[0, extent)`.
#[inline]
fn valid_range(k: usize, pad: usize, stride: usize, in_extent: usize, out_extent: usize) -> (usize, usize) {
    let lo = if k >= pad { 0 } else { (pad - k + stride - 1) / stride };
    if in_extent + pad < k + 1 {
        return (0, 0);
    }
    let hi_inclusive = (in_extent - 1 + pad - k) / stride;
    let hi = hi_inclusive.min(out_extent.saturating_sub(1)) + 1;
    (lo.min(hi), hi)
}

fn plane_tasks<T: Send, F: Fn(usize, &mut [T]) + Sync>(buf: &mut [T], plane: usize, parallel: bool, f: F) {
    if parallel {
        buf.par_chunks_mut(plane).enumerate().for_each(|(i, c)| f(i, c));
    } else {
        buf.chunks_mut(plane).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Dot product with eight independent accumulator lanes. The lane layout is
/// fixed, so results are reproducible (and vectorizable despite float
/// addition being non-associative).
#[inline]
fn dot8<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
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

pub fn forward<T: Scalar>(
    d: &ConvDims,
    x: &[T],
    w: &[T],
    b: Option<&[T]>,
    out: &mut [T],
    parallel: bool,
) {
    let plane = d.ho * d.wo;
    plane_tasks(out, plane, parallel, |idx, out_plane| {
        let oc = idx / d.t;
        let to = idx % d.t;
        let bias = b.map_or(T::zero(), |b| b[oc]);
        out_plane.iter_mut().for_each(|v| *v = bias);
        for ic in 0..d.ic {
            for kt in 0..d.kt {
                let ti = to + kt;
                if ti < d.pt || ti - d.pt >= d.t {
                    continue;
                }
                let ti = ti - d.pt;
                let x_frame = &x[((ic * d.t + ti) * d.hi) * d.wi..][..d.hi * d.wi];
                for kh in 0..d.kh {
                    let (ho_lo, ho_hi) = valid_range(kh, d.ph, d.sh, d.hi, d.ho);
                    for kw in 0..d.kw {
                        let wv = w[(((oc * d.ic + ic) * d.kt + kt) * d.kh + kh) * d.kw + kw];
                        if wv == T::zero() {
                            continue;
                        }
                        let (wo_lo, wo_hi) = valid_range(kw, d.pw, d.sw, d.wi, d.wo);
                        if wo_lo >= wo_hi {
                            continue;
                        }
                        for ho in ho_lo..ho_hi {
                            let hi_row = ho * d.sh + kh - d.ph;
                            let x_row = &x_frame[hi_row * d.wi..][..d.wi];
                            let out_row = &mut out_plane[ho * d.wo..][..d.wo];
                            if d.sw == 1 {
                                let xi0 = wo_lo + kw - d.pw;
                                let xs = &x_row[xi0..xi0 + (wo_hi - wo_lo)];
                                let os = &mut out_row[wo_lo..wo_hi];
                                for (o, &xv) in os.iter_mut().zip(xs) {
                                    *o += wv * xv;
                                }
                            } else {
                                for wo in wo_lo..wo_hi {
                                    let wi = wo * d.sw + kw - d.pw;
                                    out_row[wo] += wv * x_row[wi];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

/// Accumulates into `dx`.
pub fn backward_input<T: Scalar>(
    d: &ConvDims,
    w: &[T],
    dout: &[T],
    dx: &mut [T],
    parallel: bool,
) {
    let plane = d.hi * d.wi;
    plane_tasks(dx, plane, parallel, |idx, dx_plane| {
        let ic = idx / d.t;
        let ti = idx % d.t;
        for oc in 0..d.oc {
            for kt in 0..d.kt {
                // ti = to + kt - pt  =>  to = ti + pt - kt
                let to = ti + d.pt;
                if to < kt || to - kt >= d.t {
                    continue;
                }
                let to = to - kt;
                let dout_frame = &dout[((oc * d.t + to) * d.ho) * d.wo..][..d.ho * d.wo];
                for kh in 0..d.kh {
                    let (ho_lo, ho_hi) = valid_range(kh, d.ph, d.sh, d.hi, d.ho);
                    for kw in 0..d.kw {
                        let wv = w[(((oc * d.ic + ic) * d.kt + kt) * d.kh + kh) * d.kw + kw];
                        if wv == T::zero() {
                            continue;
                        }
                        let (wo_lo, wo_hi) = valid_range(kw, d.pw, d.sw, d.wi, d.wo);
                        if wo_lo >= wo_hi {
                            continue;
                        }
                        for ho in ho_lo..ho_hi {
                            let hi_row = ho * d.sh + kh - d.ph;
                            let dout_row = &dout_frame[ho * d.wo..][..d.wo];
                            let dx_row = &mut dx_plane[hi_row * d.wi..][..d.wi];
                            if d.sw == 1 {
                                let xi0 = wo_lo + kw - d.pw;
                                let dxs = &mut dx_row[xi0..xi0 + (wo_hi - wo_lo)];
                                let dos = &dout_row[wo_lo..wo_hi];
                                for (g, &dov) in dxs.iter_mut().zip(dos) {
                                    *g += wv * dov;
                                }
                            } else {
                                for wo in wo_lo..wo_hi {
                                    let wi = wo * d.sw + kw - d.pw;
                                    dx_row[wi] += wv * dout_row[wo];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

/// Accumulates into `dw`.
pub fn backward_weight<T: Scalar>(
    d: &ConvDims,
    x: &[T],
    dout: &[T],
    dw: &mut [T],
    parallel: bool,
) {
    let kernel = d.kt * d.kh * d.kw;
    plane_tasks(dw, kernel, parallel, |idx, dw_chunk| {
        let oc = idx / d.ic;
        let ic = idx % d.ic;
        for kt in 0..d.kt {
            for kh in 0..d.kh {
                let (ho_lo, ho_hi) = valid_range(kh, d.ph, d.sh, d.hi, d.ho);
                for kw in 0..d.kw {
                    let (wo_lo, wo_hi) = valid_range(kw, d.pw, d.sw, d.wi, d.wo);
                    if wo_lo >= wo_hi {
                        continue;
                    }
                    let mut acc = T::zero();
                    for to in 0..d.t {
                        let ti = to + kt;
                        if ti < d.pt || ti - d.pt >= d.t {
                            continue;
                        }
                        let ti = ti - d.pt;
                        let x_frame = &x[((ic * d.t + ti) * d.hi) * d.wi..][..d.hi * d.wi];
                        let dout_frame = &dout[((oc * d.t + to) * d.ho) * d.wo..][..d.ho * d.wo];
                        for ho in ho_lo..ho_hi {
                            let hi_row = ho * d.sh + kh - d.ph;
                            let x_row = &x_frame[hi_row * d.wi..][..d.wi];
                            let dout_row = &dout_frame[ho * d.wo..][..d.wo];
                            if d.sw == 1 {
                                let xi0 = wo_lo + kw - d.pw;
                                let xs = &x_row[xi0..xi0 + (wo_hi - wo_lo)];
                                let dos = &dout_row[wo_lo..wo_hi];
                                acc += dot8(xs, dos);
                            } else {
                                for wo in wo_lo..wo_hi {
                                    let wi = wo * d.sw + kw - d.pw;
                                    acc += x_row[wi] * dout_row[wo];
                                }
                            }
                        }
                    }
                    dw_chunk[(kt * d.kh + kh) * d.kw + kw] += acc;
                }
            }
        }
    });
}

/// Accumulates into `db`.
pub fn backward_bias<T: Scalar>(d: &ConvDims, dout: &[T], db: &mut [T]) {
    let plane = d.t * d.ho * d.wo;
    for oc in 0..d.oc {
        let mut acc = T::zero();
        for &v in &dout[oc * plane..(oc + 1) * plane] {
            acc += v;
        }
        db[oc] += acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_range_covers_padding() {
        // extent 5, kernel offset k, pad 1, stride 1: interior for k=1 is full.
        assert_eq!(valid_range(1, 1, 1, 5, 5), (0, 5));
        assert_eq!(valid_range(0, 1, 1, 5, 5), (1, 5));
        assert_eq!(valid_range(2, 1, 1, 5, 5), (0, 4));
        // stride 2, 5 -> 3 outputs at in coords 0,2,4 with k=0,pad=0.
        assert_eq!(valid_range(0, 0, 2, 5, 3), (0, 3));
    }
}
