#![allow(clippy::needless_range_loop)]

use gaitkin_core::math::Matrix;
use gaitkin_core::pipeline::{Segment, WindowedDataset};
use gaitkin_core::tcn::{
    adam_step, decode_model, encode_model, fine_tune, loss_and_grad, train, AdamState, EvalScratch,
    Mode, NormStats, TcnConfig, TcnError, TcnModel, TrainConfig, ADAM_EPS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| r.random_range(-2.0..2.0))
            .collect(),
    )
}

fn random_model(cfg: TcnConfig, r: &mut ChaCha8Rng) -> TcnModel {
    let mut m = TcnModel::init(cfg, r).unwrap();
    for t in m.weights.params_mut() {
        for x in t.iter_mut() {
            *x += r.random_range(-0.05..0.05);
        }
    }
    let ch = m.config.in_channels;
    m.norm = NormStats {
        mean: (0..ch).map(|_| r.random_range(-0.5..0.5)).collect(),
        std: (0..ch).map(|_| r.random_range(0.5..2.0)).collect(),
    };
    m
}

/// Straightforward nested-loop evaluation of the network on one window,
/// reading taps before the window start as zero.
fn naive_forward(m: &TcnModel, window: &Matrix) -> Vec<f64> {
    let t = window.cols();
    let k = m.config.kernel;
    let mut x: Vec<Vec<f64>> = (0..window.rows())
        .map(|c| {
            (0..t)
                .map(|i| (window.get(c, i) - m.norm.mean[c]) / m.norm.std[c])
                .collect()
        })
        .collect();
    let conv = |inp: &Vec<Vec<f64>>, w: &[f64], b: &[f64], d: usize| -> Vec<Vec<f64>> {
        let cin = inp.len();
        (0..b.len())
            .map(|o| {
                (0..t)
                    .map(|i| {
                        let mut acc = 0.0;
                        for tap in 0..k {
                            let back = (k - 1 - tap) * d;
                            if back > i {
                                continue;
                            }
                            for c in 0..cin {
                                acc += w[(o * cin + c) * k + tap] * inp[c][i - back];
                            }
                        }
                        (acc + b[o]).max(0.0)
                    })
                    .collect()
            })
            .collect()
    };
    for blk in &m.weights.blocks {
        let d = blk.conv1.dilation;
        let h1 = conv(&x, &blk.conv1.weight, &blk.conv1.bias, d);
        let h2 = conv(&h1, &blk.conv2.weight, &blk.conv2.bias, d);
        let res: Vec<Vec<f64>> = match &blk.proj {
            Some(p) => (0..p.out_dim)
                .map(|o| {
                    (0..t)
                        .map(|i| {
                            p.bias[o]
                                + (0..p.in_dim)
                                    .map(|c| p.weight[o * p.in_dim + c] * x[c][i])
                                    .sum::<f64>()
                        })
                        .collect()
                })
                .collect(),
            None => x.clone(),
        };
        x = h2
            .iter()
            .zip(&res)
            .map(|(a, r)| a.iter().zip(r).map(|(u, v)| u + v).collect())
            .collect();
    }
    let h = &m.weights.head;
    (0..h.out_dim)
        .map(|o| {
            h.bias[o]
                + (0..h.in_dim)
                    .map(|c| h.weight[o * h.in_dim + c] * x[c][t - 1])
                    .sum::<f64>()
        })
        .collect()
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

#[test]
fn receptive_field_formula() {
    assert_eq!(TcnConfig::default().receptive_field(), 373);
    assert_eq!(TcnConfig::default().window_len, 373);
    let mut c = TcnConfig::small(3, 1, 4, 1);
    assert_eq!(c.receptive_field(), 1);
    c = TcnConfig::small(3, 1, 4, 3);
    assert_eq!(c.receptive_field(), 5);
}

/// Index (counted back from the window end) of the oldest input sample whose
/// perturbation moves the output, plus one.
fn measured_extent(m: &TcnModel, base: &Matrix, candidates: &[usize]) -> usize {
    let t = base.cols();
    let reference = m.predict_segment(base, &[t - 1]).unwrap()[0].clone();
    let mut extent = 0;
    for &back in candidates {
        let mut x = base.clone();
        for c in 0..x.rows() {
            let v = x.get(c, t - 1 - back);
            x.set(c, t - 1 - back, v + 50.0);
        }
        if m.predict_segment(&x, &[t - 1]).unwrap()[0] != reference {
            extent = extent.max(back + 1);
        }
    }
    extent
}

#[test]
fn impulse_response_extent_is_the_receptive_field() {
    let mut r = rng(7);
    let cfg = TcnConfig {
        dropout: 0.0,
        window_len: 520,
        ..TcnConfig::default()
    };
    let m = random_model(cfg, &mut r);
    let base = random_matrix(18, 520, &mut r);
    let mut candidates: Vec<usize> = (360..=400).collect();
    candidates.extend([0, 50, 200, 450, 519]);
    assert_eq!(measured_extent(&m, &base, &candidates), 373);
}

#[test]
fn forward_matches_naive_reference_default_config() {
    let mut r = rng(11);
    let m = random_model(TcnConfig::default(), &mut r);
    let mut scratch = EvalScratch::new(&m);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let w = random_matrix(18, 373, &mut r);
        let fast = m.forward(&w, Mode::Eval, &mut r).unwrap();
        let naive = naive_forward(&m, &w);
        let mut out = [0.0; 4];
        scratch.predict_into(&m, &w, &mut out);
        assert_eq!(fast, out);
        for (a, b) in fast.iter().zip(&naive) {
            worst = worst.max((a - b).abs() / b.abs().max(1e-12));
        }
    }
    assert!(worst < 1e-6, "worst relative deviation {worst:e}");
}

#[test]
fn small_config_matches_naive_reference() {
    let mut r = rng(12);
    for blocks in 1..4 {
        let mut cfg = TcnConfig::small(5, blocks, 6, 3);
        cfg.window_len = 16;
        let m = random_model(cfg, &mut r);
        let w = random_matrix(5, 16, &mut r);
        let fast = m.forward(&w, Mode::Eval, &mut r).unwrap();
        for (a, b) in fast.iter().zip(naive_forward(&m, &w)) {
            assert!(rel_close(*a, b, 1e-9), "{a} vs {b}");
        }
    }
}

#[test]
fn zero_weights_give_the_readout_bias() {
    let mut m = TcnModel::zeros(TcnConfig::default()).unwrap();
    m.weights.head.bias.copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
    let mut r = rng(1);
    for _ in 0..3 {
        let w = random_matrix(18, 373, &mut r);
        assert_eq!(
            m.forward(&w, Mode::Eval, &mut r).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
    }
}

#[test]
fn kernel_one_network_with_active_units_is_affine() {
    // Positive weights and inputs keep every ReLU in its linear regime, so the
    // network collapses to head * (W2 * W1 * x + P * x) plus biases.
    let mut cfg = TcnConfig::small(3, 1, 4, 1);
    cfg.window_len = 4;
    let mut r = rng(3);
    let mut m = TcnModel::zeros(cfg).unwrap();
    for t in m.weights.params_mut() {
        for x in t.iter_mut() {
            *x = r.random_range(0.1..1.0);
        }
    }
    let w = Matrix::from_vec(3, 4, (0..12).map(|_| r.random_range(0.1..1.0)).collect());
    let b = &m.weights.blocks[0];
    let p = b.proj.as_ref().unwrap();
    let x: Vec<f64> = (0..3).map(|c| w.get(c, 3)).collect();
    let matvec = |wt: &[f64], bias: &[f64], v: &[f64]| -> Vec<f64> {
        (0..bias.len())
            .map(|o| {
                bias[o]
                    + (0..v.len())
                        .map(|c| wt[o * v.len() + c] * v[c])
                        .sum::<f64>()
            })
            .collect()
    };
    let h1 = matvec(&b.conv1.weight, &b.conv1.bias, &x);
    let h2 = matvec(&b.conv2.weight, &b.conv2.bias, &h1);
    let res = matvec(&p.weight, &p.bias, &x);
    let feat: Vec<f64> = h2.iter().zip(&res).map(|(a, b)| a + b).collect();
    let expect = matvec(&m.weights.head.weight, &m.weights.head.bias, &feat);
    let got = m.forward(&w, Mode::Eval, &mut r).unwrap();
    for (a, b) in got.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn eval_forward_is_pure_and_rejects_bad_input() {
    let mut r = rng(5);
    let m = random_model(TcnConfig::default(), &mut r);
    let w = random_matrix(18, 373, &mut r);
    let a = m.forward(&w, Mode::Eval, &mut rng(1)).unwrap();
    let b = m.forward(&w, Mode::Eval, &mut rng(2)).unwrap();
    assert_eq!(
        a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
        b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
    );
    let short = random_matrix(18, 372, &mut r);
    assert!(matches!(
        m.forward(&short, Mode::Eval, &mut r),
        Err(TcnError::ShapeMismatch { .. })
    ));
    let narrow = random_matrix(17, 373, &mut r);
    assert!(matches!(
        m.forward(&narrow, Mode::Eval, &mut r),
        Err(TcnError::ShapeMismatch { .. })
    ));
    let mut bad = w.clone();
    bad.set(3, 100, f64::NAN);
    assert_eq!(
        m.forward(&bad, Mode::Eval, &mut r),
        Err(TcnError::NonFiniteInput)
    );
}

#[test]
fn train_mode_dropout_is_seeded() {
    let mut r = rng(8);
    let m = random_model(TcnConfig::default(), &mut r);
    let w = random_matrix(18, 373, &mut r);
    let a = m.forward(&w, Mode::Train, &mut rng(1)).unwrap();
    let b = m.forward(&w, Mode::Train, &mut rng(1)).unwrap();
    let c = m.forward(&w, Mode::Train, &mut rng(2)).unwrap();
    let e = m.forward(&w, Mode::Eval, &mut rng(2)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_ne!(a, e);
}

#[test]
fn dense_segment_equals_windowed_forward_bitwise() {
    let mut r = rng(9);
    let m = random_model(TcnConfig::default(), &mut r);
    let seg = random_matrix(18, 600, &mut r);
    let cols: Vec<usize> = (372..600).step_by(17).collect();
    let dense = m.predict_segment(&seg, &cols).unwrap();
    let mut scratch = EvalScratch::new(&m);
    for (p, d) in cols.iter().zip(&dense) {
        let mut w = Matrix::zeros(18, 373);
        for c in 0..18 {
            w.row_mut(c).copy_from_slice(&seg.row(c)[p - 372..=*p]);
        }
        let mut out = [0.0; 4];
        scratch.predict_into(&m, &w, &mut out);
        assert_eq!(
            out.map(f64::to_bits).to_vec(),
            d.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn causality_over_random_models() {
    for seed in 0..100 {
        let mut r = rng(1000 + seed);
        let blocks = r.random_range(1..4);
        let kernel = r.random_range(1..5);
        let mut cfg = TcnConfig::small(4, blocks, 5, kernel);
        cfg.window_len = 40;
        let m = random_model(cfg, &mut r);
        let seg = random_matrix(4, 40, &mut r);
        let t = r.random_range(0..39);
        let before = m.predict_segment(&seg, &[t]).unwrap();
        let mut cut = seg.clone();
        for c in 0..4 {
            for i in t + 1..40 {
                cut.set(c, i, 0.0);
            }
        }
        cut.set(0, 39, 1e3);
        assert_eq!(
            m.predict_segment(&cut, &[t]).unwrap(),
            before,
            "seed {seed}"
        );
    }
}

#[test]
fn receptive_field_edge_default_config() {
    let mut r = rng(21);
    let cfg = TcnConfig {
        dropout: 0.0,
        window_len: 400,
        ..TcnConfig::default()
    };
    let m = random_model(cfg, &mut r);
    let base = random_matrix(18, 400, &mut r);
    assert_eq!(measured_extent(&m, &base, &[372]), 373);
    assert_eq!(measured_extent(&m, &base, &[373, 374, 399]), 0);
}

fn segments_for(r: &mut ChaCha8Rng, channels: usize, len: usize, n_targets: usize) -> Vec<Segment> {
    let input = random_matrix(channels, len, r);
    let targets = (0..n_targets)
        .map(|i| {
            (
                len - 1 - i * 2,
                [
                    r.random_range(-5.0..5.0),
                    1.0,
                    r.random_range(-5.0..5.0),
                    -2.0,
                ],
            )
        })
        .collect();
    vec![Segment { input, targets }]
}

fn loss_of(m: &TcnModel, segs: &[Segment], mode: Mode, seed: u64) -> f64 {
    loss_and_grad(m, segs, mode, &mut rng(seed)).unwrap().0
}

fn check_gradients(m: &TcnModel, segs: &[Segment], mode: Mode) -> f64 {
    let (_, grads) = loss_and_grad(m, segs, mode, &mut rng(77)).unwrap();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let n_tensors = grads.params().len();
    for ti in 0..n_tensors {
        let len = grads.params()[ti].len();
        for i in 0..len {
            let mut plus = m.clone();
            plus.weights.params_mut()[ti][i] += h;
            let mut minus = m.clone();
            minus.weights.params_mut()[ti][i] -= h;
            let fd = (loss_of(&plus, segs, mode, 77) - loss_of(&minus, segs, mode, 77)) / (2.0 * h);
            let an = grads.params()[ti][i];
            let abs = (fd - an).abs();
            if abs > 1e-7 {
                worst = worst.max(abs / fd.abs().max(an.abs()));
            }
        }
    }
    worst
}

#[test]
fn gradients_match_central_differences() {
    let shapes = [
        (3, 1, 4, 3),
        (4, 2, 4, 2),
        (2, 2, 3, 3),
        (5, 3, 3, 2),
        (3, 2, 3, 1),
    ];
    for (k, &(inc, blocks, ch, kernel)) in shapes.iter().enumerate() {
        let mut r = rng(300 + k as u64);
        let mut cfg = TcnConfig::small(inc, blocks, ch, kernel);
        cfg.window_len = cfg.receptive_field().max(kernel);
        let len = cfg.window_len + 6;
        let m = random_model(cfg, &mut r);
        let segs = segments_for(&mut r, inc, len, 3);
        let worst = check_gradients(&m, &segs, Mode::Eval);
        assert!(worst < 1e-4, "config {k}: worst relative error {worst:e}");
    }
}

#[test]
fn gradients_with_fixed_dropout_masks() {
    let mut r = rng(400);
    let mut cfg = TcnConfig::small(3, 2, 4, 3);
    cfg.dropout = 0.3;
    let m = random_model(cfg.clone(), &mut r);
    let segs = segments_for(&mut r, 3, cfg.window_len + 4, 2);
    assert!(check_gradients(&m, &segs, Mode::Train) < 1e-4);
}

#[test]
fn readout_gradient_closed_form() {
    let mut r = rng(500);
    let mut cfg = TcnConfig::small(4, 1, 4, 2);
    cfg.window_len = 8;
    let m = random_model(cfg, &mut r);
    let input = random_matrix(4, 8, &mut r);
    let y = [1.0, -2.0, 0.5, 3.0];
    let segs = vec![Segment {
        input: input.clone(),
        targets: vec![(7, y)],
    }];
    let (_, g) = loss_and_grad(&m, &segs, Mode::Eval, &mut r).unwrap();
    // Features: same network with an identity readout.
    let mut probe = m.clone();
    probe.weights.head.weight = (0..16)
        .map(|i| if i % 5 == 0 { 1.0 } else { 0.0 })
        .collect();
    probe.weights.head.bias = vec![0.0; 4];
    let feat = probe.forward(&input, Mode::Eval, &mut r).unwrap();
    let pred = m.forward(&input, Mode::Eval, &mut r).unwrap();
    for o in 0..4 {
        for c in 0..4 {
            let expect = 2.0 * (pred[o] - y[o]) * feat[c] / 4.0;
            assert!((g.head.weight[o * 4 + c] - expect).abs() < 1e-9);
        }
    }
}

#[test]
fn perfect_predictions_have_zero_loss() {
    let mut m = TcnModel::zeros(TcnConfig::small(3, 1, 4, 2)).unwrap();
    m.weights.head.bias = vec![1.0, 2.0, 3.0, 4.0];
    let mut r = rng(1);
    let segs = vec![Segment {
        input: random_matrix(3, 3, &mut r),
        targets: vec![(2, [1.0, 2.0, 3.0, 4.0])],
    }];
    let (loss, g) = loss_and_grad(&m, &segs, Mode::Train, &mut r).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.head.bias.iter().all(|&x| x == 0.0));
    assert_eq!(
        loss_and_grad(&m, &[], Mode::Eval, &mut r).unwrap_err(),
        TcnError::EmptyBatch
    );
}

#[test]
fn adam_zero_gradient_keeps_weights() {
    let mut r = rng(2);
    let m = random_model(TcnConfig::small(3, 1, 4, 2), &mut r);
    let mut w = m.weights.clone();
    let mut st = AdamState::new(&w);
    let g = w.zeros_like();
    let mut g1 = g.clone();
    g1.head.bias[0] = 1.0;
    adam_step(&mut w, &g1, &mut st, 1e-3).unwrap();
    let m_before = st.m.head.bias[0];
    let w_before = w.clone();
    adam_step(&mut w, &g, &mut st, 1e-3).unwrap();
    assert_eq!(st.step, 2);
    assert!((st.m.head.bias[0] - 0.9 * m_before).abs() < 1e-15);
    assert_eq!(w.blocks, w_before.blocks);
    let mut fresh = m.weights.clone();
    let mut st2 = AdamState::new(&fresh);
    adam_step(&mut fresh, &g, &mut st2, 1e-3).unwrap();
    assert_eq!(fresh, m.weights);
}

#[test]
fn adam_first_step_hand_computed() {
    let m = TcnModel::zeros(TcnConfig::small(1, 1, 1, 1)).unwrap();
    let mut w = m.weights.clone();
    let mut st = AdamState::new(&w);
    let mut g = w.zeros_like();
    g.head.bias[0] = 0.25;
    g.head.bias[1] = -3.0;
    g.head.bias[2] = 1e-9;
    adam_step(&mut w, &g, &mut st, 1e-3).unwrap();
    // m = 0.1 g, v = 0.001 g^2; bias correction restores g and g^2.
    for (i, gi) in [0.25f64, -3.0, 1e-9].iter().enumerate() {
        let expect = -1e-3 * gi / (gi.abs() + ADAM_EPS);
        assert!(
            (w.head.bias[i] - expect).abs() < 1e-15,
            "{i}: {} vs {expect}",
            w.head.bias[i]
        );
    }
    assert_eq!(st.step, 1);
}

#[test]
fn adam_constant_gradient_tends_to_lr_sign() {
    let m = TcnModel::zeros(TcnConfig::small(1, 1, 1, 1)).unwrap();
    let mut w = m.weights.clone();
    let mut st = AdamState::new(&w);
    let mut g = w.zeros_like();
    g.head.bias[0] = -0.7;
    let mut prev = 0.0;
    let mut last = 0.0;
    for _ in 0..2000 {
        adam_step(&mut w, &g, &mut st, 1e-3).unwrap();
        last = w.head.bias[0] - prev;
        prev = w.head.bias[0];
    }
    assert!((last - 1e-3).abs() < 1e-9);
    let other = TcnModel::zeros(TcnConfig::small(2, 1, 1, 1)).unwrap();
    assert!(matches!(
        adam_step(&mut w, &other.weights, &mut st, 1e-3),
        Err(TcnError::ShapeMismatch { .. })
    ));
}

#[test]
fn model_codec_round_trip() {
    let mut r = rng(600);
    let m = random_model(TcnConfig::default(), &mut r);
    let bytes = encode_model(&m);
    assert_eq!(&bytes[..4], b"TCNK");
    let back = decode_model(&bytes).unwrap();
    assert_eq!(back.config, m.config);
    assert_eq!(back.norm, m.norm);
    for (a, b) in back.weights.params().iter().zip(m.weights.params()) {
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(encode_model(&back), bytes);
}

#[test]
fn model_codec_detects_damage() {
    let mut r = rng(601);
    let m = random_model(TcnConfig::small(3, 2, 4, 3), &mut r);
    let bytes = encode_model(&m);
    let mut corrupt = bytes.clone();
    let mid = bytes.len() - 40;
    corrupt[mid] ^= 0x10;
    assert_eq!(
        decode_model(&corrupt).unwrap_err(),
        TcnError::ChecksumMismatch
    );
    let mut newer = bytes.clone();
    newer[4..8].copy_from_slice(&2u32.to_le_bytes());
    assert_eq!(
        decode_model(&newer).unwrap_err(),
        TcnError::VersionMismatch {
            found: 2,
            expected: 1
        }
    );
    assert_eq!(
        decode_model(&bytes[..bytes.len() - 100]).unwrap_err(),
        TcnError::TruncatedFile
    );
    assert_eq!(
        decode_model(&bytes[..10]).unwrap_err(),
        TcnError::TruncatedFile
    );
    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert_eq!(decode_model(&magic).unwrap_err(), TcnError::BadMagic);
}

fn teacher_dataset(n: usize, noise: f64, seed: u64) -> WindowedDataset {
    let mut r = rng(seed);
    let w = 13;
    let windows = (0..n)
        .map(|_| {
            let offsets: Vec<f64> = (0..3).map(|_| r.random_range(-2.0..2.0)).collect();
            let data: Vec<f64> = (0..3 * w)
                .map(|i| offsets[i / w] + r.random_range(-0.5..0.5))
                .collect();
            let m = Matrix::from_vec(3, w, data);
            let means: Vec<f64> = (0..3)
                .map(|c| m.row(c).iter().sum::<f64>() / w as f64)
                .collect();
            let mut target = [0.0; 4];
            let a = [
                [10.0, -5.0, 2.0],
                [3.0, 8.0, -4.0],
                [-6.0, 1.0, 9.0],
                [2.0, 2.0, 2.0],
            ];
            for (o, t) in target.iter_mut().enumerate() {
                let n: f64 = r.random_range(-1.0..1.0);
                *t = 20.0
                    + a[o].iter().zip(&means).map(|(x, y)| x * y).sum::<f64>()
                    + noise * n * 1.7320508;
            }
            (m, target)
        })
        .collect();
    WindowedDataset::from_windows(windows).unwrap()
}

fn teacher_config() -> TcnConfig {
    let mut cfg = TcnConfig::small(3, 2, 8, 3);
    cfg.dropout = 0.0;
    cfg
}

#[test]
fn training_fits_a_linear_teacher() {
    let ds = teacher_dataset(640, 0.1, 1);
    let tcfg = TrainConfig {
        max_epochs: 30,
        seed: 3,
        ..TrainConfig::default()
    };
    let (_, hist) = train(&ds, teacher_config(), &tcfg).unwrap();
    let first = hist.epochs[0].train_loss;
    let last = hist.epochs.last().unwrap().train_loss;
    assert!(last < 0.1 * first, "first {first}, last {last}");
}

#[test]
fn training_is_deterministic() {
    let ds = teacher_dataset(200, 0.1, 2);
    let tcfg = TrainConfig {
        max_epochs: 4,
        patience: 2,
        seed: 9,
        ..TrainConfig::default()
    };
    let mut cfg = teacher_config();
    cfg.dropout = 0.1;
    let (m1, h1) = train(&ds, cfg.clone(), &tcfg).unwrap();
    let (m2, h2) = train(&ds, cfg, &tcfg).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(encode_model(&m1), encode_model(&m2));
}

#[test]
fn identical_pairs_converge_and_stop_early() {
    let mut r = rng(4);
    let w = random_matrix(3, 13, &mut r);
    let ds = WindowedDataset::from_windows(vec![(w, [10.0, -3.0, 40.0, 5.0]); 64]).unwrap();
    let tcfg = TrainConfig {
        seed: 1,
        ..TrainConfig::default()
    };
    let (m, hist) = train(&ds, teacher_config(), &tcfg).unwrap();
    assert!(hist.stopped_early);
    assert!(hist.epochs.len() < tcfg.max_epochs);
    assert!(hist.best_val_loss() < 1e-6);
    let seg = ds.segments(&[0], false);
    assert!(m.mse(&seg).unwrap() < 1e-6);
}

#[test]
fn normalization_standardizes_the_training_split() {
    let ds = teacher_dataset(100, 0.1, 5);
    let idx: Vec<usize> = (0..90).collect();
    let norm = NormStats::fit(&ds, &idx);
    for c in 0..3 {
        let vals: Vec<f64> = idx
            .iter()
            .flat_map(|&i| ds.window(i).row(c).to_vec())
            .map(|x| norm.apply(c, x))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd =
            (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64).sqrt();
        assert!(
            mean.abs() < 1e-6 && (sd - 1.0).abs() < 1e-6,
            "channel {c}: {mean} {sd}"
        );
    }
}

#[test]
fn fine_tune_checks_shapes_and_keeps_scaling() {
    let ds = teacher_dataset(200, 0.1, 6);
    let tcfg = TrainConfig {
        max_epochs: 3,
        patience: 2,
        seed: 2,
        ..TrainConfig::default()
    };
    let (base, hist) = train(&ds, teacher_config(), &tcfg).unwrap();
    let (tuned, h2) = fine_tune(&base, &ds, &tcfg).unwrap();
    assert_eq!(tuned.norm, base.norm);
    assert!(h2.best_val_loss() <= hist.best_val_loss() * 1.05);
    let mut other = TcnConfig::small(4, 2, 8, 3);
    other.dropout = 0.0;
    let wrong = TcnModel::init(other, &mut rng(1)).unwrap();
    assert!(matches!(
        fine_tune(&wrong, &ds, &tcfg),
        Err(TcnError::ConfigMismatch(_))
    ));
    let tiny = teacher_dataset(10, 0.1, 7);
    assert!(matches!(
        train(&tiny, teacher_config(), &tcfg),
        Err(TcnError::DatasetTooSmall { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pruned_and_dense_paths_agree(seed in 0u64..10_000, blocks in 1usize..4, kernel in 1usize..5, extra in 0usize..9) {
        let mut r = rng(seed);
        let mut cfg = TcnConfig::small(3, blocks, 5, kernel);
        cfg.window_len = cfg.receptive_field().max(kernel) + extra;
        let m = random_model(cfg.clone(), &mut r);
        let w = random_matrix(3, cfg.window_len, &mut r);
        let dense = m.predict_segment(&w, &[cfg.window_len - 1]).unwrap();
        let pruned = m.forward(&w, Mode::Eval, &mut r).unwrap();
        prop_assert_eq!(&dense[0], &pruned);
    }

    #[test]
    fn codec_round_trips_random_configs(seed in 0u64..10_000, blocks in 1usize..4, ch in 1usize..6, kernel in 1usize..4) {
        let mut r = rng(seed);
        let m = random_model(TcnConfig::small(2, blocks, ch, kernel), &mut r);
        let bytes = encode_model(&m);
        prop_assert_eq!(decode_model(&bytes).unwrap(), m);
    }
}
