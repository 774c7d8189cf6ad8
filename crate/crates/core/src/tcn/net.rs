use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::kernels::{conv_backward, conv_forward, conv_forward_from};
use super::weights::{Linear, TcnWeights};
use super::{TcnError, TcnModel};
use crate::math::Matrix;
use crate::pipeline::Segment;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Dropout active.
    Train,
    /// Deterministic.
    Eval,
}

#[inline]
fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Dot product with eight fixed partial sums.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

#[inline]
fn axpy(y: &mut [f64], w: f64, x: &[f64]) {
    for (yy, xx) in y.iter_mut().zip(x) {
        *yy += w * *xx;
    }
}

fn linear_forward(lin: &Linear, x: &Matrix, y: &mut Matrix) {
    for o in 0..lin.out_dim {
        let yrow = y.row_mut(o);
        yrow.fill(lin.bias[o]);
        for c in 0..lin.in_dim {
            axpy(yrow, lin.weight[o * lin.in_dim + c], x.row(c));
        }
    }
}

#[inline]
fn linear_at(lin: &Linear, x: &Matrix, p: usize, o: usize) -> f64 {
    let mut acc = lin.bias[o];
    for c in 0..lin.in_dim {
        acc += lin.weight[o * lin.in_dim + c] * x.row(c)[p];
    }
    acc
}

fn linear_backward(lin: &Linear, x: &Matrix, dy: &Matrix, g: &mut Linear, dx: Option<&mut Matrix>) {
    for o in 0..lin.out_dim {
        let dyrow = dy.row(o);
        g.bias[o] += dyrow.iter().sum::<f64>();
        for c in 0..lin.in_dim {
            g.weight[o * lin.in_dim + c] += dot(dyrow, x.row(c));
        }
    }
    if let Some(dx) = dx {
        for o in 0..lin.out_dim {
            for c in 0..lin.in_dim {
                axpy(dx.row_mut(c), lin.weight[o * lin.in_dim + c], dy.row(o));
            }
        }
    }
}

fn head_at(head: &Linear, h: &Matrix, col: usize) -> Vec<f64> {
    (0..head.out_dim)
        .map(|o| linear_at(head, h, col, o))
        .collect()
}

fn normalize(model: &TcnModel, raw: &Matrix) -> Matrix {
    let mut x = Matrix::zeros(raw.rows(), raw.cols());
    for c in 0..raw.rows() {
        for (d, s) in x.row_mut(c).iter_mut().zip(raw.row(c)) {
            *d = model.norm.apply(c, *s);
        }
    }
    x
}

fn dropout_mask<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..len)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect()
}

struct BlockTrace {
    pre1: Matrix,
    h1: Matrix,
    pre2: Matrix,
    m1: Option<Vec<f64>>,
    m2: Option<Vec<f64>>,
}

/// Activations of a dense pass over one segment. `xs[b]` is the input of
/// block `b`; the last entry holds the readout features.
struct Trace {
    xs: Vec<Matrix>,
    blocks: Vec<BlockTrace>,
}

fn forward_dense<R: Rng + ?Sized>(
    model: &TcnModel,
    raw: &Matrix,
    mut rng: Option<&mut R>,
) -> Trace {
    let t = raw.cols();
    let ch = model.config.channels;
    let p = model.config.dropout;
    let mut xs = vec![normalize(model, raw)];
    let mut blocks = Vec::with_capacity(model.weights.blocks.len());
    for blk in &model.weights.blocks {
        let x = xs.last().expect("input present");
        let mut pre1 = Matrix::zeros(ch, t);
        conv_forward(&blk.conv1, x, &mut pre1);
        let m1 = match rng.as_deref_mut() {
            Some(r) if p > 0.0 => Some(dropout_mask(ch * t, p, r)),
            _ => None,
        };
        let mut h1 = pre1.clone();
        apply_act(&mut h1, m1.as_deref());
        let mut pre2 = Matrix::zeros(ch, t);
        conv_forward(&blk.conv2, &h1, &mut pre2);
        let m2 = match rng.as_deref_mut() {
            Some(r) if p > 0.0 => Some(dropout_mask(ch * t, p, r)),
            _ => None,
        };
        let mut out = pre2.clone();
        apply_act(&mut out, m2.as_deref());
        match &blk.proj {
            Some(proj) => {
                let mut res = Matrix::zeros(ch, t);
                linear_forward(proj, x, &mut res);
                for (o, r) in out.as_mut_slice().iter_mut().zip(res.as_slice()) {
                    *o += *r;
                }
            }
            None => {
                for (o, r) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
                    *o += *r;
                }
            }
        }
        blocks.push(BlockTrace {
            pre1,
            h1,
            pre2,
            m1,
            m2,
        });
        xs.push(out);
    }
    Trace { xs, blocks }
}

fn apply_act(m: &mut Matrix, mask: Option<&[f64]>) {
    let data = m.as_mut_slice();
    for v in data.iter_mut() {
        *v = relu(*v);
    }
    if let Some(mask) = mask {
        for (v, k) in data.iter_mut().zip(mask) {
            *v *= *k;
        }
    }
}

/// `d` becomes the gradient w.r.t. the pre-activation.
fn act_backward(d: &mut Matrix, pre: &Matrix, mask: Option<&[f64]>) {
    for (i, (g, z)) in d.as_mut_slice().iter_mut().zip(pre.as_slice()).enumerate() {
        if *z > 0.0 {
            if let Some(m) = mask {
                *g *= m[i];
            }
        } else {
            *g = 0.0;
        }
    }
}

fn backward(model: &TcnModel, trace: &Trace, dfeat: Matrix, grads: &mut TcnWeights) {
    let mut dh = dfeat;
    for b in (0..model.weights.blocks.len()).rev() {
        let blk = &model.weights.blocks[b];
        let bt = &trace.blocks[b];
        let x = &trace.xs[b];
        let mut dpre2 = dh.clone();
        act_backward(&mut dpre2, &bt.pre2, bt.m2.as_deref());
        let mut dh1 = Matrix::zeros(bt.h1.rows(), bt.h1.cols());
        conv_backward(
            &blk.conv2,
            &bt.h1,
            &dpre2,
            &mut grads.blocks[b].conv2,
            Some(&mut dh1),
        );
        act_backward(&mut dh1, &bt.pre1, bt.m1.as_deref());
        let mut dx = (b > 0).then(|| Matrix::zeros(x.rows(), x.cols()));
        conv_backward(&blk.conv1, x, &dh1, &mut grads.blocks[b].conv1, dx.as_mut());
        match (&blk.proj, grads.blocks[b].proj.as_mut()) {
            (Some(proj), Some(gp)) => linear_backward(proj, x, &dh, gp, dx.as_mut()),
            _ => {
                if let Some(dx) = dx.as_mut() {
                    for (a, g) in dx.as_mut_slice().iter_mut().zip(dh.as_slice()) {
                        *a += *g;
                    }
                }
            }
        }
        match dx {
            Some(dx) => dh = dx,
            None => break,
        }
    }
}

fn check_input(model: &TcnModel, raw: &Matrix) -> Result<(), TcnError> {
    if raw.rows() != model.config.in_channels {
        return Err(TcnError::ShapeMismatch {
            expected: (model.config.in_channels, raw.cols()),
            found: (raw.rows(), raw.cols()),
        });
    }
    if !raw.is_finite() {
        return Err(TcnError::NonFiniteInput);
    }
    Ok(())
}

impl TcnModel {
    /// Output for one window of exactly `window_len` samples. Eval mode uses
    /// the pruned path and ignores `rng`.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        window: &Matrix,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Vec<f64>, TcnError> {
        check_input(self, window)?;
        if window.cols() != self.config.window_len {
            return Err(TcnError::ShapeMismatch {
                expected: (self.config.in_channels, self.config.window_len),
                found: (window.rows(), window.cols()),
            });
        }
        match mode {
            Mode::Eval => {
                let mut scratch = EvalScratch::new(self);
                let mut out = vec![0.0; self.config.out_dim];
                scratch.predict_into(self, window, &mut out);
                Ok(out)
            }
            Mode::Train => {
                let trace = forward_dense(self, window, Some(rng));
                Ok(head_at(
                    &self.weights.head,
                    trace.xs.last().expect("features"),
                    window.cols() - 1,
                ))
            }
        }
    }

    /// Eval-mode outputs at the given columns of a raw segment, one dense pass.
    /// Column `p` equals [`Self::forward`] on the window ending at `p`
    /// whenever that window lies inside the segment and covers the
    /// receptive field.
    pub fn predict_segment(&self, raw: &Matrix, cols: &[usize]) -> Result<Vec<Vec<f64>>, TcnError> {
        check_input(self, raw)?;
        let trace = forward_dense::<rand_chacha::ChaCha8Rng>(self, raw, None);
        let h = trace.xs.last().expect("features");
        Ok(cols
            .iter()
            .map(|&c| head_at(&self.weights.head, h, c))
            .collect())
    }

    /// Eval-mode mean squared error over all targets of the segments.
    pub fn mse(&self, segments: &[Segment]) -> Result<f64, TcnError> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for s in segments {
            let cols: Vec<usize> = s.targets.iter().map(|t| t.0).collect();
            let preds = self.predict_segment(&s.input, &cols)?;
            for (p, (_, y)) in preds.iter().zip(&s.targets) {
                for (a, b) in p.iter().zip(y) {
                    sum += (a - b) * (a - b);
                }
                n += p.len();
            }
        }
        if n == 0 {
            return Err(TcnError::EmptyBatch);
        }
        Ok(sum / n as f64)
    }
}

/// Mean squared error over every target of every segment and its exact
/// gradient. In train mode dropout masks are drawn from `rng`.
pub fn loss_and_grad<R: Rng + ?Sized>(
    model: &TcnModel,
    segments: &[Segment],
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, TcnWeights), TcnError> {
    let out_dim = model.config.out_dim;
    if out_dim != crate::JOINT_ANGLES {
        return Err(TcnError::ConfigMismatch("targets are four joint angles"));
    }
    let n: usize = segments.iter().map(|s| s.targets.len()).sum();
    if n == 0 {
        return Err(TcnError::EmptyBatch);
    }
    let scale = 1.0 / (n * out_dim) as f64;
    let mut grads = model.weights.zeros_like();
    let mut loss = 0.0;
    for seg in segments {
        check_input(model, &seg.input)?;
        let trace = match mode {
            Mode::Train => forward_dense(model, &seg.input, Some(&mut *rng)),
            Mode::Eval => forward_dense::<R>(model, &seg.input, None),
        };
        let h = trace.xs.last().expect("features");
        let head = &model.weights.head;
        let mut dfeat = Matrix::zeros(h.rows(), h.cols());
        for &(col, ref y) in &seg.targets {
            let pred = head_at(head, h, col);
            for o in 0..out_dim {
                let e = pred[o] - y[o];
                loss += e * e;
                let d = 2.0 * e * scale;
                grads.head.bias[o] += d;
                for c in 0..head.in_dim {
                    grads.head.weight[o * head.in_dim + c] += d * h.get(c, col);
                    dfeat.row_mut(c)[col] += head.weight[o * head.in_dim + c] * d;
                }
            }
        }
        backward(model, &trace, dfeat, &mut grads);
    }
    Ok((loss * scale, grads))
}

/// Reusable buffers for eval-mode inference on fixed-length windows. Only
/// the suffix of each layer that the last output depends on is evaluated.
#[derive(Clone, Debug)]
pub struct EvalScratch {
    window_len: usize,
    /// Per block: first position of the conv1 output and of the block output
    /// that must be computed.
    starts: Vec<(usize, usize)>,
    input_start: usize,
    xs: Vec<Matrix>,
    h1: Matrix,
}

impl EvalScratch {
    pub fn new(model: &TcnModel) -> Self {
        let cfg = &model.config;
        let t = cfg.window_len;
        let mut need = t - 1;
        let mut starts = Vec::with_capacity(cfg.blocks);
        for b in (0..cfg.blocks).rev() {
            let span = (cfg.kernel - 1) * cfg.dilations[b];
            let mid = need.saturating_sub(span);
            starts.push((mid, need));
            need = mid.saturating_sub(span);
        }
        starts.reverse();
        let mut xs = vec![Matrix::zeros(cfg.in_channels, t)];
        xs.extend((0..cfg.blocks).map(|_| Matrix::zeros(cfg.channels, t)));
        Self {
            window_len: t,
            starts,
            input_start: need,
            xs,
            h1: Matrix::zeros(cfg.channels, t),
        }
    }

    /// Number of trailing input samples the last output reads.
    pub fn input_span(&self) -> usize {
        self.window_len - self.input_start
    }

    /// Eval-mode output of `model` for `window` (raw, `in_channels x
    /// window_len`) into `out`. The caller guarantees shape and finiteness.
    pub fn predict_into(&mut self, model: &TcnModel, window: &Matrix, out: &mut [f64]) {
        debug_assert_eq!(window.cols(), self.window_len);
        let a0 = self.input_start;
        for c in 0..window.rows() {
            let src = &window.row(c)[a0..];
            let dst = &mut self.xs[0].row_mut(c)[a0..];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = model.norm.apply(c, *s);
            }
        }
        for (b, blk) in model.weights.blocks.iter().enumerate() {
            let (mid, from) = self.starts[b];
            let (lo, hi) = self.xs.split_at_mut(b + 1);
            let x = &lo[b];
            let y = &mut hi[0];
            conv_forward_from(&blk.conv1, x, &mut self.h1, mid);
            for o in 0..blk.conv1.out_ch {
                for v in &mut self.h1.row_mut(o)[mid..] {
                    *v = relu(*v);
                }
            }
            conv_forward_from(&blk.conv2, &self.h1, y, from);
            for o in 0..blk.conv2.out_ch {
                let yrow = &mut y.row_mut(o)[from..];
                for v in yrow.iter_mut() {
                    *v = relu(*v);
                }
                match &blk.proj {
                    Some(proj) => {
                        for (i, v) in yrow.iter_mut().enumerate() {
                            *v += linear_at(proj, x, from + i, o);
                        }
                    }
                    None => {
                        for (v, r) in yrow.iter_mut().zip(&x.row(o)[from..]) {
                            *v += *r;
                        }
                    }
                }
            }
        }
        let h = self.xs.last().expect("features");
        for (o, v) in out.iter_mut().enumerate() {
            *v = linear_at(&model.weights.head, h, self.window_len - 1, o);
        }
    }
}
