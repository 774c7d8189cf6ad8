//! Convolution kernels.
//!
//! Forward: every output element is its bias followed by `+= w * x` over
//! input channel then tap, both ascending, skipping taps that fall before the
//! segment start. The tiled body and the scalar edge code use that order, so
//! results do not depend on tiling or on which positions are evaluated.

use super::weights::Conv1d;
use crate::math::Matrix;

const OB: usize = 4;
const TB: usize = 16;

#[inline]
pub(crate) fn conv_at(conv: &Conv1d, x: &Matrix, p: usize, o: usize) -> f64 {
    let mut acc = conv.bias[o];
    for c in 0..conv.in_ch {
        let xrow = x.row(c);
        for k in 0..conv.kernel {
            let s = conv.shift(k);
            if s <= p {
                acc += conv.w(o, c, k) * xrow[p - s];
            }
        }
    }
    acc
}

pub(crate) fn conv_forward(conv: &Conv1d, x: &Matrix, y: &mut Matrix) {
    conv_forward_from(conv, x, y, 0);
}

/// Evaluates positions `start..` only; inputs before `start - span` are not
/// read.
pub(crate) fn conv_forward_from(conv: &Conv1d, x: &Matrix, y: &mut Matrix, start: usize) {
    let t = x.cols();
    let span = (conv.kernel - 1) * conv.dilation;
    let tiles_end = start + (t - start) / TB * TB;
    let mut o0 = 0;
    while o0 + OB <= conv.out_ch {
        let mut p0 = start;
        while p0 < tiles_end {
            let acc = if p0 >= span {
                tile_full(conv, x, o0, p0)
            } else {
                tile_edge(conv, x, o0, p0)
            };
            for (i, a) in acc.iter().enumerate() {
                y.row_mut(o0 + i)[p0..p0 + TB].copy_from_slice(a);
            }
            p0 += TB;
        }
        for o in o0..o0 + OB {
            for p in tiles_end..t {
                let v = conv_at(conv, x, p, o);
                y.row_mut(o)[p] = v;
            }
        }
        o0 += OB;
    }
    for o in o0..conv.out_ch {
        for p in start..t {
            let v = conv_at(conv, x, p, o);
            y.row_mut(o)[p] = v;
        }
    }
}

// Outputs `o0..o0 + OB` at positions `p0..p0 + TB`, every tap in range.
#[inline(always)]
fn tile_full(conv: &Conv1d, x: &Matrix, o0: usize, p0: usize) -> [[f64; TB]; OB] {
    let kk = conv.kernel;
    let mut a0 = [conv.bias[o0]; TB];
    let mut a1 = [conv.bias[o0 + 1]; TB];
    let mut a2 = [conv.bias[o0 + 2]; TB];
    let mut a3 = [conv.bias[o0 + 3]; TB];
    for c in 0..conv.in_ch {
        let xrow = x.row(c);
        let w0 = &conv.weight[(o0 * conv.in_ch + c) * kk..][..kk];
        let w1 = &conv.weight[((o0 + 1) * conv.in_ch + c) * kk..][..kk];
        let w2 = &conv.weight[((o0 + 2) * conv.in_ch + c) * kk..][..kk];
        let w3 = &conv.weight[((o0 + 3) * conv.in_ch + c) * kk..][..kk];
        for k in 0..kk {
            let s = conv.shift(k);
            let xs: &[f64; TB] = xrow[p0 - s..p0 - s + TB].try_into().expect("tile");
            let (v0, v1, v2, v3) = (w0[k], w1[k], w2[k], w3[k]);
            for j in 0..TB {
                a0[j] += v0 * xs[j];
                a1[j] += v1 * xs[j];
                a2[j] += v2 * xs[j];
                a3[j] += v3 * xs[j];
            }
        }
    }
    [a0, a1, a2, a3]
}

// Same as `tile_full` near the segment start, where some taps are skipped.
fn tile_edge(conv: &Conv1d, x: &Matrix, o0: usize, p0: usize) -> [[f64; TB]; OB] {
    let kk = conv.kernel;
    let mut acc = [[0.0; TB]; OB];
    for (i, a) in acc.iter_mut().enumerate() {
        *a = [conv.bias[o0 + i]; TB];
    }
    for c in 0..conv.in_ch {
        let xrow = x.row(c);
        for k in 0..kk {
            let s = conv.shift(k);
            if s >= p0 + TB {
                continue;
            }
            let j0 = s.saturating_sub(p0);
            for (i, a) in acc.iter_mut().enumerate() {
                let w = conv.weight[((o0 + i) * conv.in_ch + c) * kk + k];
                for j in j0..TB {
                    a[j] += w * xrow[p0 + j - s];
                }
            }
        }
    }
    acc
}

/// Accumulates weight and bias gradients into `g` and, if given, the input
/// gradient into `dx`.
pub(crate) fn conv_backward(
    conv: &Conv1d,
    x: &Matrix,
    dy: &Matrix,
    g: &mut Conv1d,
    dx: Option<&mut Matrix>,
) {
    let t = x.cols();
    for o in 0..conv.out_ch {
        g.bias[o] += dy.row(o).iter().sum::<f64>();
    }
    weight_grad(conv, x, dy, g);
    if let Some(dx) = dx {
        input_grad(conv, dy, dx, t);
    }
}

fn weight_grad(conv: &Conv1d, x: &Matrix, dy: &Matrix, g: &mut Conv1d) {
    const L: usize = 8;
    let t = x.cols();
    let kk = conv.kernel;
    let mut o0 = 0;
    while o0 < conv.out_ch {
        let ob = OB.min(conv.out_ch - o0);
        for c in 0..conv.in_ch {
            let xrow = x.row(c);
            for k in 0..kk {
                let s = conv.shift(k);
                if s >= t {
                    continue;
                }
                let n = t - s;
                let full = n / L * L;
                let mut sums = [0.0; OB];
                if ob == OB {
                    let d0 = &dy.row(o0)[s..];
                    let d1 = &dy.row(o0 + 1)[s..];
                    let d2 = &dy.row(o0 + 2)[s..];
                    let d3 = &dy.row(o0 + 3)[s..];
                    let mut a0 = [0.0f64; L];
                    let mut a1 = [0.0f64; L];
                    let mut a2 = [0.0f64; L];
                    let mut a3 = [0.0f64; L];
                    let mut q = 0;
                    while q < full {
                        let xv: &[f64; L] = xrow[q..q + L].try_into().expect("lane");
                        let e0: &[f64; L] = d0[q..q + L].try_into().expect("lane");
                        let e1: &[f64; L] = d1[q..q + L].try_into().expect("lane");
                        let e2: &[f64; L] = d2[q..q + L].try_into().expect("lane");
                        let e3: &[f64; L] = d3[q..q + L].try_into().expect("lane");
                        for l in 0..L {
                            a0[l] += e0[l] * xv[l];
                            a1[l] += e1[l] * xv[l];
                            a2[l] += e2[l] * xv[l];
                            a3[l] += e3[l] * xv[l];
                        }
                        q += L;
                    }
                    for (sum, a) in sums.iter_mut().zip([a0, a1, a2, a3]) {
                        *sum = a.iter().sum::<f64>();
                    }
                } else {
                    for (i, sum) in sums.iter_mut().enumerate().take(ob) {
                        let d = &dy.row(o0 + i)[s..];
                        *sum = (0..full).map(|u| d[u] * xrow[u]).sum::<f64>();
                    }
                }
                for (i, sum) in sums.iter().enumerate().take(ob) {
                    let d = &dy.row(o0 + i)[s..];
                    let mut v = *sum;
                    for u in full..n {
                        v += d[u] * xrow[u];
                    }
                    g.weight[((o0 + i) * conv.in_ch + c) * kk + k] += v;
                }
            }
        }
        o0 += ob;
    }
}

// dx[c][u] += sum over o, k of w[o][c][k] * dy[o][u + shift(k)].
fn input_grad(conv: &Conv1d, dy: &Matrix, dx: &mut Matrix, t: usize) {
    let span = (conv.kernel - 1) * conv.dilation;
    let tiles_end = t / TB * TB;
    let mut c0 = 0;
    while c0 + OB <= conv.in_ch {
        let mut u0 = 0;
        while u0 < tiles_end {
            let mut acc = [[0.0; TB]; OB];
            for (i, a) in acc.iter_mut().enumerate() {
                a.copy_from_slice(&dx.row(c0 + i)[u0..u0 + TB]);
            }
            let acc = if u0 + TB + span <= t {
                grad_tile_full(conv, dy, c0, u0, acc)
            } else {
                grad_tile_edge(conv, dy, c0, u0, acc, t)
            };
            for (i, a) in acc.iter().enumerate() {
                dx.row_mut(c0 + i)[u0..u0 + TB].copy_from_slice(a);
            }
            u0 += TB;
        }
        for c in c0..c0 + OB {
            input_grad_scalar(conv, dy, dx, c, tiles_end..t, t);
        }
        c0 += OB;
    }
    for c in c0..conv.in_ch {
        input_grad_scalar(conv, dy, dx, c, 0..t, t);
    }
}

fn input_grad_scalar(
    conv: &Conv1d,
    dy: &Matrix,
    dx: &mut Matrix,
    c: usize,
    range: core::ops::Range<usize>,
    t: usize,
) {
    for u in range {
        let mut v = dx.row(c)[u];
        for o in 0..conv.out_ch {
            let drow = dy.row(o);
            for k in 0..conv.kernel {
                let s = conv.shift(k);
                if u + s < t {
                    v += conv.w(o, c, k) * drow[u + s];
                }
            }
        }
        dx.row_mut(c)[u] = v;
    }
}

#[inline(always)]
fn grad_tile_full(
    conv: &Conv1d,
    dy: &Matrix,
    c0: usize,
    u0: usize,
    acc: [[f64; TB]; OB],
) -> [[f64; TB]; OB] {
    let kk = conv.kernel;
    let [mut a0, mut a1, mut a2, mut a3] = acc;
    for o in 0..conv.out_ch {
        let drow = dy.row(o);
        let w0 = &conv.weight[(o * conv.in_ch + c0) * kk..][..kk];
        let w1 = &conv.weight[(o * conv.in_ch + c0 + 1) * kk..][..kk];
        let w2 = &conv.weight[(o * conv.in_ch + c0 + 2) * kk..][..kk];
        let w3 = &conv.weight[(o * conv.in_ch + c0 + 3) * kk..][..kk];
        for k in 0..kk {
            let s = conv.shift(k);
            let ds: &[f64; TB] = drow[u0 + s..u0 + s + TB].try_into().expect("tile");
            let (v0, v1, v2, v3) = (w0[k], w1[k], w2[k], w3[k]);
            for j in 0..TB {
                a0[j] += v0 * ds[j];
                a1[j] += v1 * ds[j];
                a2[j] += v2 * ds[j];
                a3[j] += v3 * ds[j];
            }
        }
    }
    [a0, a1, a2, a3]
}

fn grad_tile_edge(
    conv: &Conv1d,
    dy: &Matrix,
    c0: usize,
    u0: usize,
    mut acc: [[f64; TB]; OB],
    t: usize,
) -> [[f64; TB]; OB] {
    for o in 0..conv.out_ch {
        let drow = dy.row(o);
        for k in 0..conv.kernel {
            let s = conv.shift(k);
            if u0 + s >= t {
                continue;
            }
            let j1 = (t - s - u0).min(TB);
            for (i, a) in acc.iter_mut().enumerate() {
                let w = conv.w(o, c0 + i, k);
                for j in 0..j1 {
                    a[j] += w * drow[u0 + j + s];
                }
            }
        }
    }
    acc
}
