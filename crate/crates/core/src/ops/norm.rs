//! Group normalization with per-frame statistics.

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug)]
pub struct NormDims {
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub groups: usize,
}

impl NormDims {
    pub fn from_shape(xs: &[usize], groups: usize) -> Self {
        NormDims {
            c: xs[0],
            t: xs[1],
            h: xs[2],
            w: xs[3],
            groups,
        }
    }

    fn group_channels(&self) -> usize {
        self.c / self.groups
    }
}

fn group_stats<T: Scalar>(d: &NormDims, x: &[T], t: usize, g: usize, eps: T) -> (T, T) {
    let gc = d.group_channels();
    let hw = d.h * d.w;
    let n = T::cast((gc * hw) as f64);
    let mut sum = T::zero();
    for c in g * gc..(g + 1) * gc {
        let row = &x[(c * d.t + t) * hw..][..hw];
        for &v in row {
            sum += v;
        }
    }
    let mean = sum / n;
    let mut var = T::zero();
    for c in g * gc..(g + 1) * gc {
        let row = &x[(c * d.t + t) * hw..][..hw];
        for &v in row {
            let e = v - mean;
            var += e * e;
        }
    }
    let inv_std = T::one() / (var / n + eps).sqrt();
    (mean, inv_std)
}

pub fn forward<T: Scalar>(d: &NormDims, x: &[T], gamma: &[T], beta: &[T], eps: T, out: &mut [T]) {
    let gc = d.group_channels();
    let hw = d.h * d.w;
    for t in 0..d.t {
        for g in 0..d.groups {
            let (mean, inv_std) = group_stats(d, x, t, g, eps);
            for c in g * gc..(g + 1) * gc {
                let base = (c * d.t + t) * hw;
                let (ga, be) = (gamma[c], beta[c]);
                for i in 0..hw {
                    out[base + i] = ga * (x[base + i] - mean) * inv_std + be;
                }
            }
        }
    }
}

/// Accumulates into `dx`, `dgamma`, `dbeta`.
#[allow(clippy::too_many_arguments)]
pub fn backward<T: Scalar>(
    d: &NormDims,
    x: &[T],
    gamma: &[T],
    eps: T,
    dout: &[T],
    dx: &mut [T],
    dgamma: &mut [T],
    dbeta: &mut [T],
) {
    let gc = d.group_channels();
    let hw = d.h * d.w;
    let n = T::cast((gc * hw) as f64);
    for t in 0..d.t {
        for g in 0..d.groups {
            let (mean, inv_std) = group_stats(d, x, t, g, eps);
            // First pass: per-group reductions of dxhat and dxhat * xhat.
            let mut sum_dxh = T::zero();
            let mut sum_dxh_xh = T::zero();
            for c in g * gc..(g + 1) * gc {
                let base = (c * d.t + t) * hw;
                let ga = gamma[c];
                let mut dga = T::zero();
                let mut dbe = T::zero();
                for i in 0..hw {
                    let xh = (x[base + i] - mean) * inv_std;
                    let dy = dout[base + i];
                    let dxh = dy * ga;
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh;
                    dga += dy * xh;
                    dbe += dy;
                }
                dgamma[c] += dga;
                dbeta[c] += dbe;
            }
            let mean_dxh = sum_dxh / n;
            let mean_dxh_xh = sum_dxh_xh / n;
            for c in g * gc..(g + 1) * gc {
                let base = (c * d.t + t) * hw;
                let ga = gamma[c];
                for i in 0..hw {
                    let xh = (x[base + i] - mean) * inv_std;
                    let dxh = dout[base + i] * ga;
                    dx[base + i] += (dxh - mean_dxh - xh * mean_dxh_xh) * inv_std;
                }
            }
        }
    }
}
